//! Random rectilinear floor plans.
//!
//! A rectangle is cut into rooms by recursive guillotine splits, one corner
//! room is dropped to notch the outline, and two neighbouring pieces are
//! merged into an L-shaped living room. Plans whose silhouette, or whose
//! living room alone, is close to dihedrally symmetric are rejected.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::d4::D4;
use crate::error::{Error, Result};
use crate::floorplan::{render_subset, shared_walls, FloorPlan, Framing, Room, RoomKind};
use crate::geometry::{simplify_contour, trace_contours, Point, Polygon};
use crate::raster::{apply_d4, crop_to_content, mask_iou, resize_nn, BinaryMask};

/// Size and shape limits, in plan units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanShape {
    pub rooms: usize,
    pub width: (u32, u32),
    pub height: (u32, u32),
    pub min_side: u32,
    /// Rooms must be chained by shared walls at least this long.
    pub min_contact: f64,
    pub units_per_cell: f64,
    /// Largest fraction of the total area the living room may take.
    pub max_living_share: f64,
}

impl Default for PlanShape {
    fn default() -> Self {
        PlanShape {
            rooms: 6,
            width: (14, 20),
            height: (10, 15),
            min_side: 3,
            min_contact: 2.0,
            units_per_cell: 0.1,
            max_living_share: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Rect {
    x0: u32,
    y0: u32,
    x1: u32,
    y1: u32,
}

impl Rect {
    fn w(&self) -> u32 {
        self.x1 - self.x0
    }

    fn h(&self) -> u32 {
        self.y1 - self.y0
    }

    fn area(&self) -> u32 {
        self.w() * self.h()
    }

    fn polygon(&self) -> Polygon {
        Polygon::rect(self.x0 as f64, self.y0 as f64, self.x1 as f64, self.y1 as f64).expect("non-degenerate rect")
    }
}

/// Union of two rectangles is an L when they touch along an edge that is
/// flush at exactly one end.
fn forms_l(a: &Rect, b: &Rect) -> bool {
    let (a, b) = if (a.x0, a.y0) <= (b.x0, b.y0) { (a, b) } else { (b, a) };
    let flush = |p0: u32, p1: u32, q0: u32, q1: u32| {
        let overlap = p1.min(q1) as i64 - p0.max(q0) as i64;
        overlap > 0 && ((p0 == q0) != (p1 == q1))
    };
    (a.x1 == b.x0 && flush(a.y0, a.y1, b.y0, b.y1))
        || (b.x1 == a.x0 && flush(a.y0, a.y1, b.y0, b.y1))
        || (a.y1 == b.y0 && flush(a.x0, a.x1, b.x0, b.x1))
        || (b.y1 == a.y0 && flush(a.x0, a.x1, b.x0, b.x1))
}

fn union_outline(a: &Rect, b: &Rect, width: u32, height: u32) -> Polygon {
    let inside = |r: &Rect, x: usize, y: usize| {
        (r.x0 as usize..r.x1 as usize).contains(&x) && (r.y0 as usize..r.y1 as usize).contains(&y)
    };
    let mask = BinaryMask::from_fn(width as usize, height as usize, |x, y| inside(a, x, y) || inside(b, x, y));
    let loops = trace_contours(&mask);
    simplify_contour(&loops[0], 1e-6).expect("union of two rectangles is a valid outline")
}

/// Highest IoU of the squashed silhouette against any non-identity
/// dihedral image of itself.
pub fn self_similarity(mask: &BinaryMask) -> f64 {
    let Ok(crop) = crop_to_content(mask, 0) else {
        return 1.0;
    };
    let sq = resize_nn(&crop, 100, 100);
    D4::ALL[1..]
        .iter()
        .map(|&g| mask_iou(&sq, &apply_d4(&sq, g)).expect("square grids").iou)
        .fold(0.0, f64::max)
}

fn split_leaves<R: Rng>(rng: &mut R, shape: &PlanShape, outer: Rect, count: usize) -> Option<Vec<Rect>> {
    let mut leaves = vec![outer];
    let m = shape.min_side;
    while leaves.len() < count {
        let splittable: Vec<usize> = (0..leaves.len())
            .filter(|&i| leaves[i].w() >= 2 * m || leaves[i].h() >= 2 * m)
            .collect();
        if splittable.is_empty() {
            return None;
        }
        let total: u32 = splittable.iter().map(|&i| leaves[i].area()).sum();
        let mut pick = rng.random_range(0..total);
        let mut idx = splittable[0];
        for &i in &splittable {
            if pick < leaves[i].area() {
                idx = i;
                break;
            }
            pick -= leaves[i].area();
        }
        let r = leaves[idx];
        let vertical = match (r.w() >= 2 * m, r.h() >= 2 * m) {
            (true, true) => r.w() > r.h() || (r.w() == r.h() && rng.random_bool(0.5)),
            (v, _) => v,
        };
        let (a, b) = if vertical {
            let cut = r.x0 + rng.random_range(m..=r.w() - m);
            (Rect { x1: cut, ..r }, Rect { x0: cut, ..r })
        } else {
            let cut = r.y0 + rng.random_range(m..=r.h() - m);
            (Rect { y1: cut, ..r }, Rect { y0: cut, ..r })
        };
        leaves[idx] = a;
        leaves.push(b);
    }
    Some(leaves)
}

fn connected(plan: &FloorPlan, min_contact: f64) -> bool {
    let n = plan.rooms.len();
    let mut adj = vec![Vec::new(); n];
    for w in shared_walls(plan) {
        if w.length() >= min_contact {
            adj[w.a].push(w.b);
            adj[w.b].push(w.a);
        }
    }
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    while let Some(i) = queue.pop_front() {
        for &j in &adj[i] {
            if !seen[j] {
                seen[j] = true;
                queue.push_back(j);
            }
        }
    }
    seen.iter().all(|&s| s)
}

fn try_plan<R: Rng>(rng: &mut R, shape: &PlanShape) -> Option<FloorPlan> {
    let width = rng.random_range(shape.width.0..=shape.width.1);
    let height = rng.random_range(shape.height.0..=shape.height.1);
    let outer = Rect {
        x0: 0,
        y0: 0,
        x1: width,
        y1: height,
    };
    // Two pieces form the living room and one is cut away as a notch.
    let mut leaves = split_leaves(rng, shape, outer, shape.rooms + 2)?;

    let corner_pieces: Vec<usize> = (0..leaves.len())
        .filter(|&i| {
            let r = &leaves[i];
            let at_corner = (r.x0 == 0 || r.x1 == width) && (r.y0 == 0 || r.y1 == height);
            at_corner && r.w() < width && r.h() < height
        })
        .collect();
    let notch = *corner_pieces.get(rng.random_range(0..corner_pieces.len().max(1)))?;
    leaves.remove(notch);

    let mut pairs = Vec::new();
    for i in 0..leaves.len() {
        for j in i + 1..leaves.len() {
            if forms_l(&leaves[i], &leaves[j]) {
                pairs.push((i, j));
            }
        }
    }
    let &(i, j) = pairs.get(rng.random_range(0..pairs.len().max(1)))?;
    let living = union_outline(&leaves[i], &leaves[j], width, height);
    let mut others: Vec<Rect> = leaves
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != i && k != j)
        .map(|(_, r)| *r)
        .collect();
    others.sort_by_key(|r| (r.y0, r.x0));

    let mut rooms = vec![Room {
        name: "living".into(),
        kind: RoomKind::LivingRoom,
        outline: living,
    }];
    for (k, r) in others.iter().enumerate() {
        rooms.push(Room {
            name: format!("room_{}", k + 1),
            kind: if rng.random_bool(0.5) { RoomKind::Bedroom } else { RoomKind::Other },
            outline: r.polygon(),
        });
    }
    let plan = FloorPlan::new(shape.units_per_cell, rooms).ok()?;
    if plan.rooms[0].outline.area() > shape.max_living_share * plan.total_area() || !connected(&plan, shape.min_contact) {
        return None;
    }
    let framing = Framing::native(&plan);
    let all: Vec<usize> = (0..plan.rooms.len()).collect();
    if self_similarity(&render_subset(&plan, &all, &framing)) > 0.9
        || self_similarity(&render_subset(&plan, &[0], &framing)) > 0.85
    {
        return None;
    }
    Some(plan)
}

/// Draws plans until one satisfies every constraint.
pub fn random_plan<R: Rng>(rng: &mut R, shape: &PlanShape) -> Result<FloorPlan> {
    if shape.rooms < 2 {
        return Err(Error::schema(None, "synthetic plans need at least two rooms"));
    }
    for _ in 0..10_000 {
        if let Some(plan) = try_plan(rng, shape) {
            return Ok(plan);
        }
    }
    Err(Error::schema(None, "plan shape constraints cannot be met"))
}

/// Room indices in breadth-first order from the living room over walls of
/// at least `min_contact`, neighbours visited in random order.
pub fn exploration_order<R: Rng>(rng: &mut R, plan: &FloorPlan, min_contact: f64) -> Vec<usize> {
    let n = plan.rooms.len();
    let mut adj = vec![Vec::new(); n];
    for w in shared_walls(plan) {
        if w.length() >= min_contact {
            adj[w.a].push(w.b);
            adj[w.b].push(w.a);
        }
    }
    let start = plan.living_room_index();
    let mut seen = vec![false; n];
    seen[start] = true;
    let mut order = vec![start];
    let mut queue = VecDeque::from([start]);
    while let Some(i) = queue.pop_front() {
        let mut next = adj[i].clone();
        next.sort_unstable();
        next.dedup();
        next.shuffle(rng);
        for j in next {
            if !seen[j] {
                seen[j] = true;
                order.push(j);
                queue.push_back(j);
            }
        }
    }
    // Rooms touching nothing long enough still count, last.
    order.extend((0..n).filter(|&i| !seen[i]));
    order
}

/// Plan-unit point applied to every vertex of every room.
pub fn map_plan(plan: &FloorPlan, units_per_cell: f64, f: impl Fn(Point) -> Point) -> Result<FloorPlan> {
    let rooms = plan
        .rooms
        .iter()
        .map(|r| {
            Ok(Room {
                name: r.name.clone(),
                kind: r.kind,
                outline: r.outline.map(&f)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    FloorPlan::new(units_per_cell, rooms)
}
