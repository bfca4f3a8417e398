//! The registered floor plan drawn into the robot's map frame: walls,
//! assumed doorways and room labels, plus the free-space region that is
//! handed to registration.

use crate::floorplan::{shared_walls, FloorPlan};
use crate::geometry::{Point, Polygon};
use crate::raster::{dilate, fill_polygon, label_components, mask_iou, open, BinaryMask, Connectivity};
use crate::registration::Placement;
use crate::error::Result;

use super::world::{rasterize_rooms, segment_cells};

/// Shortest shared wall that gets an assumed doorway, map cells.
const MIN_DOOR_WALL: f64 = 4.0;
/// Half width of an assumed doorway, map cells.
const DOOR_HALF_WIDTH: f64 = 1.5;

/// Plan units to map cells: a registration placement followed by a
/// per-axis affine correction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanFrame {
    pub placement: Placement,
    pub scale: (f64, f64),
    pub shift: (f64, f64),
}

impl PlanFrame {
    pub fn new(placement: Placement) -> PlanFrame {
        PlanFrame {
            placement,
            scale: (1.0, 1.0),
            shift: (0.0, 0.0),
        }
    }

    pub fn map(&self, p: Point) -> Point {
        let q = self.placement.map(p);
        Point::new(q.x * self.scale.0 + self.shift.0, q.y * self.scale.1 + self.shift.1)
    }

    pub fn map_polygon(&self, poly: &Polygon) -> Result<Polygon> {
        poly.map(|p| self.map(p))
    }

    /// Bounding box `[x0, y0, x1, y1]` of the mapped rooms.
    pub fn bbox(&self, plan: &FloorPlan, rooms: &[usize]) -> [f64; 4] {
        let mut b = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
        for &i in rooms {
            for &v in plan.rooms[i].outline.vertices() {
                let q = self.map(v);
                b = [b[0].min(q.x), b[1].min(q.y), b[2].max(q.x), b[3].max(q.y)];
            }
        }
        b
    }

    /// Same frame, stretched so that box `from` lands on box `to`.
    pub fn remapped(&self, from: [f64; 4], to: [f64; 4]) -> PlanFrame {
        let ax = (to[2] - to[0]) / (from[2] - from[0]);
        let ay = (to[3] - to[1]) / (from[3] - from[1]);
        PlanFrame {
            placement: self.placement,
            scale: (self.scale.0 * ax, self.scale.1 * ay),
            shift: (
                (self.shift.0 - from[0]) * ax + to[0],
                (self.shift.1 - from[1]) * ay + to[1],
            ),
        }
    }
}

fn render(plan: &FloorPlan, rooms: &[usize], frame: &PlanFrame, w: usize, h: usize) -> Result<BinaryMask> {
    let mut m = BinaryMask::new(w, h);
    for &i in rooms {
        fill_polygon(&mut m, &frame.map_polygon(&plan.rooms[i].outline)?, true);
    }
    Ok(m)
}

/// Coordinate descent on the four edges of the mapped rooms' bounding box,
/// maximizing IoU against `target`.
pub fn refine_frame(plan: &FloorPlan, rooms: &[usize], frame: PlanFrame, target: &BinaryMask) -> Result<PlanFrame> {
    let (w, h) = (target.width(), target.height());
    let score = |f: &PlanFrame| -> Result<f64> { Ok(mask_iou(&render(plan, rooms, f, w, h)?, target)?.iou) };
    let base = frame.bbox(plan, rooms);
    let mut bbox = base;
    let mut best = score(&frame)?;
    for _ in 0..12 {
        let mut improved = false;
        for edge in 0..4 {
            for delta in [-2.0, -1.0, -0.5, 0.5, 1.0, 2.0] {
                let mut cand = bbox;
                cand[edge] += delta;
                if cand[2] - cand[0] < 2.0 || cand[3] - cand[1] < 2.0 {
                    continue;
                }
                let s = score(&frame.remapped(base, cand))?;
                if s > best + 1e-12 {
                    best = s;
                    bbox = cand;
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }
    Ok(frame.remapped(base, bbox))
}

/// Shrinks the mapped rooms' bounding box by `by` cells on every side.
pub fn inset(plan: &FloorPlan, rooms: &[usize], frame: PlanFrame, by: f64) -> PlanFrame {
    let b = frame.bbox(plan, rooms);
    frame.remapped(b, [b[0] + by, b[1] + by, b[2] - by, b[3] - by])
}

#[derive(Debug, Clone, PartialEq)]
pub struct MotionMap {
    pub frame: PlanFrame,
    /// Walls and everything outside the plan, with doorways opened.
    pub walls: BinaryMask,
    /// Cells of each assumed doorway.
    pub doorways: Vec<Vec<(usize, usize)>>,
    room_of: Vec<Option<usize>>,
}

impl MotionMap {
    /// Draws every room of `plan` through `frame`. Each shared wall long
    /// enough for a door gets a doorway around its midpoint.
    pub fn build(plan: &FloorPlan, frame: PlanFrame, width: usize, height: usize) -> Result<MotionMap> {
        let outlines: Vec<Polygon> = plan
            .rooms
            .iter()
            .map(|r| frame.map_polygon(&r.outline))
            .collect::<Result<_>>()?;
        let (room_of, mut walls) = rasterize_rooms(&outlines, width, height);
        let mut doorways = Vec::new();
        for sw in shared_walls(plan) {
            let (a, b) = (frame.map(sw.start), frame.map(sw.end));
            let len = a.distance(b);
            if len < MIN_DOOR_WALL {
                continue;
            }
            let m = frame.map(sw.midpoint());
            let (ux, uy) = ((b.x - a.x) / len, (b.y - a.y) / len);
            let p = Point::new(m.x - ux * DOOR_HALF_WIDTH, m.y - uy * DOOR_HALF_WIDTH);
            let q = Point::new(m.x + ux * DOOR_HALF_WIDTH, m.y + uy * DOOR_HALF_WIDTH);
            let mut cells = Vec::new();
            for (x, y) in segment_cells(p, q) {
                if x < 0 || y < 0 || x as usize >= width || y as usize >= height {
                    continue;
                }
                let i = y as usize * width + x as usize;
                if matches!(room_of[i], Some(r) if r == sw.a || r == sw.b) && walls.get(x as usize, y as usize) {
                    walls.set(x as usize, y as usize, false);
                    cells.push((x as usize, y as usize));
                }
            }
            if !cells.is_empty() {
                doorways.push(cells);
            }
        }
        Ok(MotionMap {
            frame,
            walls,
            doorways,
            room_of,
        })
    }

    pub fn width(&self) -> usize {
        self.walls.width()
    }

    pub fn height(&self) -> usize {
        self.walls.height()
    }

    /// Room whose interior holds the cell; walls and doorways have none.
    pub fn room_at(&self, x: usize, y: usize) -> Option<usize> {
        if self.walls.get(x, y) {
            return None;
        }
        let r = self.room_of[y * self.width() + x];
        // Doorway cells and their immediate neighbours touch free cells of
        // another room and count as no room.
        let w = self.width();
        let on_edge = [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)].iter().any(|&(dx, dy)| {
            let (nx, ny) = (x as i64 + dx, y as i64 + dy);
            nx >= 0
                && ny >= 0
                && (nx as usize) < w
                && (ny as usize) < self.height()
                && !self.walls.get(nx as usize, ny as usize)
                && self.room_of[ny as usize * w + nx as usize] != r
        });
        if on_edge {
            None
        } else {
            r
        }
    }
}

/// Free space the robot is standing in: known-free cells opened with a
/// square of radius 2 (which cuts the region at doorways and drops thin
/// ray fans), then the 4-connected piece holding the robot, or the one
/// nearest to it within two cells.
pub fn local_room_region(free: &BinaryMask, robot: (i64, i64)) -> Option<BinaryMask> {
    let opened = open(free, 2);
    let (labels, _) = label_components(&opened, Connectivity::Four);
    let w = free.width() as i64;
    let mut probes: Vec<(i64, i64)> = (-2..=2).flat_map(|dy| (-2..=2).map(move |dx| (dx, dy))).collect();
    probes.sort_by_key(|&(dx, dy)| (dx * dx + dy * dy, dy, dx));
    let label = probes.iter().find_map(|&(dx, dy)| {
        let (x, y) = (robot.0 + dx, robot.1 + dy);
        if x < 0 || y < 0 || x >= w || y >= free.height() as i64 {
            return None;
        }
        let l = labels[(y * w + x) as usize];
        (l != 0).then_some(l)
    })?;
    Some(BinaryMask::from_fn(free.width(), free.height(), |x, y| labels[y * free.width() + x] == label))
}

/// Mask handed to registration: the accumulated room regions grown by one
/// cell so that they cover the walls around them.
pub fn registration_mask(region: &BinaryMask) -> BinaryMask {
    dilate(region, 1)
}
