//! Corner-point floor plans: parsing, room-subset variants and rendering.
//!
//! JSON schema:
//!
//! ```json
//! {"units_per_cell": 0.1,
//!  "rooms": [{"name": "living", "kind": "living_room", "corners": [[0,0],[5,0],[5,4],[0,4]]}]}
//! ```
//!
//! Coordinates are plan units with y pointing down; polygons close implicitly.

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Bounds, Extent, Point, Polygon};
use crate::raster::{fill_polygon, BinaryMask};

/// More combinable rooms than this would produce over 4096 variants.
pub const MAX_COMBINABLE_ROOMS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoomKind {
    LivingRoom,
    Bedroom,
    Other,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Room {
    pub name: String,
    pub kind: RoomKind,
    pub outline: Polygon,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FloorPlan {
    pub units_per_cell: f64,
    pub rooms: Vec<Room>,
}

#[derive(Serialize, Deserialize)]
struct RawRoom {
    name: String,
    kind: RoomKind,
    corners: Vec<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
struct RawPlan {
    units_per_cell: f64,
    rooms: Vec<RawRoom>,
}

impl FloorPlan {
    /// Validates and assembles a plan.
    pub fn new(units_per_cell: f64, rooms: Vec<Room>) -> Result<Self> {
        if !(units_per_cell.is_finite() && units_per_cell > 0.0) {
            return Err(Error::schema(None, format!("units_per_cell must be positive, got {units_per_cell}")));
        }
        if rooms.is_empty() {
            return Err(Error::schema(None, "plan has no rooms"));
        }
        let mut names = HashSet::new();
        for r in &rooms {
            if !names.insert(r.name.as_str()) {
                return Err(Error::schema(Some(&r.name), "duplicate room name"));
            }
            if !r.outline.is_simple() {
                return Err(Error::schema(Some(&r.name), "outline is not a simple polygon"));
            }
        }
        let living: Vec<&Room> = rooms.iter().filter(|r| r.kind == RoomKind::LivingRoom).collect();
        match living.len() {
            1 => {}
            0 => return Err(Error::schema(None, "plan has no living_room")),
            _ => {
                return Err(Error::schema(
                    Some(&living[1].name),
                    "plan has more than one living_room",
                ))
            }
        }
        Ok(FloorPlan {
            units_per_cell,
            rooms,
        })
    }

    pub fn living_room_index(&self) -> usize {
        self.rooms
            .iter()
            .position(|r| r.kind == RoomKind::LivingRoom)
            .expect("validated plan has a living room")
    }

    pub fn room_index(&self, name: &str) -> Result<usize> {
        self.rooms
            .iter()
            .position(|r| r.name == name)
            .ok_or_else(|| Error::UnknownRoom(name.to_owned()))
    }

    pub fn room(&self, name: &str) -> Result<&Room> {
        self.room_index(name).map(|i| &self.rooms[i])
    }

    pub fn bounds(&self) -> Bounds {
        self.rooms
            .iter()
            .map(|r| r.outline.bounds().expect("validated outline"))
            .reduce(|a, b| a.union(&b))
            .expect("validated plan has rooms")
    }

    pub fn total_area(&self) -> f64 {
        self.rooms.iter().map(|r| r.outline.area()).sum()
    }

    pub fn to_json(&self) -> String {
        let raw = RawPlan {
            units_per_cell: self.units_per_cell,
            rooms: self
                .rooms
                .iter()
                .map(|r| RawRoom {
                    name: r.name.clone(),
                    kind: r.kind,
                    corners: r.outline.vertices().iter().map(|p| [p.x, p.y]).collect(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&raw).expect("plan serializes")
    }

    pub(crate) fn to_value(&self) -> serde_json::Value {
        serde_json::from_str(&self.to_json()).expect("plan serializes")
    }

    pub(crate) fn from_value(v: serde_json::Value) -> Result<Self> {
        let raw: RawPlan = serde_json::from_value(v).map_err(|e| Error::schema(None, e.to_string()))?;
        from_raw(raw)
    }
}

fn from_raw(raw: RawPlan) -> Result<FloorPlan> {
    let mut rooms = Vec::with_capacity(raw.rooms.len());
    for r in raw.rooms {
        let corners = r.corners.iter().map(|&[x, y]| Point::new(x, y)).collect();
        let outline = Polygon::new(corners).map_err(|e| Error::schema(Some(&r.name), e.to_string()))?;
        rooms.push(Room {
            name: r.name,
            kind: r.kind,
            outline,
        });
    }
    FloorPlan::new(raw.units_per_cell, rooms)
}

/// Parses the plan JSON schema. Every failure is reported as a schema error.
pub fn parse_plan(json_text: &str) -> Result<FloorPlan> {
    let raw: RawPlan = serde_json::from_str(json_text).map_err(|e| Error::schema(None, e.to_string()))?;
    from_raw(raw)
}

/// Affine placement of plan units onto a cell grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Framing {
    pub origin: Point,
    pub cells_per_unit: f64,
    pub width: usize,
    pub height: usize,
}

impl Framing {
    /// One cell per `units_per_cell`, grid just large enough for the whole plan.
    pub fn native(plan: &FloorPlan) -> Framing {
        let b = plan.bounds();
        let s = 1.0 / plan.units_per_cell;
        Framing {
            origin: Point::new(b.min_x, b.min_y),
            cells_per_unit: s,
            width: ((b.width() * s) - 1e-9).ceil().max(1.0) as usize,
            height: ((b.height() * s) - 1e-9).ceil().max(1.0) as usize,
        }
    }

    /// Largest uniform scale that fits the whole plan into `out_w × out_h`.
    pub fn fit(plan: &FloorPlan, out_w: usize, out_h: usize) -> Framing {
        let b = plan.bounds();
        let s = (out_w as f64 / b.width()).min(out_h as f64 / b.height());
        Framing {
            origin: Point::new(b.min_x, b.min_y),
            cells_per_unit: s,
            width: out_w,
            height: out_h,
        }
    }

    pub fn to_cells(&self, p: Point) -> Point {
        Point::new(
            (p.x - self.origin.x) * self.cells_per_unit,
            (p.y - self.origin.y) * self.cells_per_unit,
        )
    }

    pub fn room_polygon(&self, room: &Room) -> Polygon {
        room.outline
            .map(|p| self.to_cells(p))
            .expect("positive scale keeps vertices distinct")
    }
}

/// Each room filled on its own grid under `framing`.
pub fn render_rooms(plan: &FloorPlan, framing: &Framing) -> Vec<BinaryMask> {
    plan.rooms
        .iter()
        .map(|r| {
            let mut m = BinaryMask::new(framing.width, framing.height);
            fill_polygon(&mut m, &framing.room_polygon(r), true);
            m
        })
        .collect()
}

/// Union of the room fills for `included` at the given framing.
pub fn render_subset(plan: &FloorPlan, included: &[usize], framing: &Framing) -> BinaryMask {
    let mut m = BinaryMask::new(framing.width, framing.height);
    for &i in included {
        fill_polygon(&mut m, &framing.room_polygon(&plan.rooms[i]), true);
    }
    m
}

/// Fills the named rooms, with the whole plan scaled to fit `out_w × out_h`.
pub fn render_variant(
    plan: &FloorPlan,
    included: &BTreeSet<String>,
    out_w: usize,
    out_h: usize,
) -> Result<BinaryMask> {
    let idx = included
        .iter()
        .map(|n| plan.room_index(n))
        .collect::<Result<Vec<_>>>()?;
    if !idx.contains(&plan.living_room_index()) {
        return Err(Error::schema(None, "a variant must include the living room"));
    }
    Ok(render_subset(plan, &idx, &Framing::fit(plan, out_w, out_h)))
}

/// Room-index subsets for every variant: the living room united with each
/// subset of the remaining rooms, ordered by subset size and then
/// lexicographically by room name.
pub fn variant_subsets(plan: &FloorPlan) -> Result<Vec<Vec<usize>>> {
    let living = plan.living_room_index();
    let mut others: Vec<usize> = (0..plan.rooms.len()).filter(|&i| i != living).collect();
    others.sort_by(|&a, &b| plan.rooms[a].name.cmp(&plan.rooms[b].name));
    let n = others.len();
    if n > MAX_COMBINABLE_ROOMS {
        return Err(Error::VariantLimit {
            combinable: n,
            limit: MAX_COMBINABLE_ROOMS,
        });
    }
    let mut out = Vec::with_capacity(1 << n);
    for k in 0..=n {
        // Lexicographic k-combinations of `0..n`.
        let mut comb: Vec<usize> = (0..k).collect();
        loop {
            let mut subset = vec![living];
            subset.extend(comb.iter().map(|&c| others[c]));
            out.push(subset);
            let Some(i) = (0..k).rev().find(|&i| comb[i] != i + n - k) else {
                break;
            };
            comb[i] += 1;
            for j in (i + 1)..k {
                comb[j] = comb[j - 1] + 1;
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanVariant {
    pub included: BTreeSet<String>,
    pub mask: BinaryMask,
}

/// All `2ⁿ` variants rendered at the plan's native resolution.
pub fn enumerate_variants(plan: &FloorPlan) -> Result<Vec<PlanVariant>> {
    let framing = Framing::native(plan);
    let rooms = render_rooms(plan, &framing);
    variant_subsets(plan)?
        .into_iter()
        .map(|subset| {
            let mut mask = BinaryMask::new(framing.width, framing.height);
            for &i in &subset {
                mask.union_with(&rooms[i])?;
            }
            Ok(PlanVariant {
                included: subset.iter().map(|&i| plan.rooms[i].name.clone()).collect(),
                mask,
            })
        })
        .collect()
}

/// Stretch of boundary two rooms have in common.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SharedWall {
    pub a: usize,
    pub b: usize,
    pub start: Point,
    pub end: Point,
}

impl SharedWall {
    pub fn length(&self) -> f64 {
        self.start.distance(self.end)
    }

    pub fn midpoint(&self) -> Point {
        Point::new((self.start.x + self.end.x) / 2.0, (self.start.y + self.end.y) / 2.0)
    }
}

/// Collinear overlaps between edges of different rooms, in plan units,
/// ordered by room pair.
pub fn shared_walls(plan: &FloorPlan) -> Vec<SharedWall> {
    const EPS: f64 = 1e-6;
    let mut out = Vec::new();
    for a in 0..plan.rooms.len() {
        for b in a + 1..plan.rooms.len() {
            for (p, q) in plan.rooms[a].outline.edges() {
                let len = p.distance(q);
                let (ux, uy) = ((q.x - p.x) / len, (q.y - p.y) / len);
                for (r, s) in plan.rooms[b].outline.edges() {
                    let off = |v: Point| (v.x - p.x) * uy - (v.y - p.y) * ux;
                    if off(r).abs() > EPS || off(s).abs() > EPS {
                        continue;
                    }
                    let t = |v: Point| (v.x - p.x) * ux + (v.y - p.y) * uy;
                    let (tr, ts) = (t(r), t(s));
                    let lo = tr.min(ts).max(0.0);
                    let hi = tr.max(ts).min(len);
                    if hi - lo > EPS {
                        let at = |t: f64| Point::new(p.x + ux * t, p.y + uy * t);
                        out.push(SharedWall {
                            a,
                            b,
                            start: at(lo),
                            end: at(hi),
                        });
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_ROOMS: &str = r#"{
        "units_per_cell": 0.5,
        "rooms": [
            {"name": "L", "kind": "living_room", "corners": [[0,0],[10,0],[10,8],[0,8]]},
            {"name": "B1", "kind": "bedroom", "corners": [[10,0],[16,0],[16,8],[10,8]]}
        ]
    }"#;

    fn plan_with_bedrooms(n: usize) -> FloorPlan {
        let mut rooms = vec![Room {
            name: "L".into(),
            kind: RoomKind::LivingRoom,
            outline: Polygon::rect(0.0, 0.0, 10.0, 10.0).unwrap(),
        }];
        for i in 0..n {
            let x = 10.0 + 5.0 * i as f64;
            rooms.push(Room {
                name: format!("B{}", i + 1),
                kind: RoomKind::Bedroom,
                outline: Polygon::rect(x, 0.0, x + 5.0, 10.0).unwrap(),
            });
        }
        FloorPlan::new(1.0, rooms).unwrap()
    }

    #[test]
    fn shared_walls_between_neighbours() {
        let p = plan_with_bedrooms(2);
        let w = shared_walls(&p);
        assert_eq!(w.len(), 2);
        assert_eq!((w[0].a, w[0].b), (0, 1));
        assert!((w[0].length() - 10.0).abs() < 1e-9);
        assert_eq!(w[0].midpoint(), Point::new(10.0, 5.0));
        assert_eq!((w[1].a, w[1].b), (1, 2));
        // Partial overlap and corner-only contact.
        let q = FloorPlan::new(
            1.0,
            vec![
                Room { name: "L".into(), kind: RoomKind::LivingRoom, outline: Polygon::rect(0.0, 0.0, 4.0, 4.0).unwrap() },
                Room { name: "A".into(), kind: RoomKind::Other, outline: Polygon::rect(4.0, 2.0, 6.0, 9.0).unwrap() },
                Room { name: "C".into(), kind: RoomKind::Other, outline: Polygon::rect(-3.0, 4.0, 0.0, 5.0).unwrap() },
            ],
        )
        .unwrap();
        let w = shared_walls(&q);
        assert_eq!(w.len(), 1);
        assert!((w[0].length() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn parses_valid_document() {
        let p = parse_plan(TWO_ROOMS).unwrap();
        assert_eq!(p.rooms.len(), 2);
        assert_eq!(p.rooms[1].kind, RoomKind::Bedroom);
        assert_eq!(p.living_room_index(), 0);
    }

    #[test]
    fn schema_errors() {
        let missing = r#"{"units_per_cell": 1.0}"#;
        assert!(matches!(parse_plan(missing), Err(Error::Schema { .. })));
        assert!(matches!(parse_plan("{not json"), Err(Error::Schema { .. })));
        let no_living = TWO_ROOMS.replace("living_room", "other");
        assert!(matches!(parse_plan(&no_living), Err(Error::Schema { .. })));
        let dup = TWO_ROOMS.replace("\"B1\"", "\"L\"");
        match parse_plan(&dup) {
            Err(Error::Schema { room, .. }) => assert_eq!(room.as_deref(), Some("L")),
            other => panic!("{other:?}"),
        }
        let two_living = TWO_ROOMS.replace("bedroom", "living_room");
        assert!(matches!(parse_plan(&two_living), Err(Error::Schema { .. })));
        let bowtie = TWO_ROOMS.replace("[[10,0],[16,0],[16,8],[10,8]]", "[[10,0],[16,8],[16,0],[10,8]]");
        match parse_plan(&bowtie) {
            Err(Error::Schema { room, .. }) => assert_eq!(room.as_deref(), Some("B1")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn json_roundtrip() {
        let p = parse_plan(TWO_ROOMS).unwrap();
        assert_eq!(parse_plan(&p.to_json()).unwrap(), p);
    }

    fn names(v: &PlanVariant) -> Vec<&str> {
        v.included.iter().map(String::as_str).collect()
    }

    #[test]
    fn variants_two_bedrooms() {
        let v = enumerate_variants(&plan_with_bedrooms(2)).unwrap();
        let got: Vec<Vec<&str>> = v.iter().map(names).collect();
        assert_eq!(got, vec![vec!["L"], vec!["B1", "L"], vec!["B2", "L"], vec!["B1", "B2", "L"]]);
        assert_eq!(enumerate_variants(&plan_with_bedrooms(0)).unwrap().len(), 1);
    }

    #[test]
    fn variant_count_and_limit() {
        for n in 0..=6 {
            let v = enumerate_variants(&plan_with_bedrooms(n)).unwrap();
            assert_eq!(v.len(), 1 << n);
            let distinct: HashSet<Vec<&str>> = v.iter().map(names).collect();
            assert_eq!(distinct.len(), 1 << n);
            assert!(v.iter().all(|x| x.included.contains("L")));
            // Subset oracle: every subset of the bedrooms appears.
            for bits in 0..(1u32 << n) {
                let mut s: BTreeSet<String> = (0..n).filter(|i| bits >> i & 1 == 1).map(|i| format!("B{}", i + 1)).collect();
                s.insert("L".into());
                assert!(v.iter().any(|x| x.included == s));
            }
        }
        assert!(matches!(
            variant_subsets(&plan_with_bedrooms(13)),
            Err(Error::VariantLimit { combinable: 13, .. })
        ));
    }

    #[test]
    fn render_single_and_disjoint_rooms() {
        let p = parse_plan(TWO_ROOMS).unwrap();
        let only_l: BTreeSet<String> = ["L".to_string()].into();
        let m = render_variant(&p, &only_l, 160, 80).unwrap();
        // Plan is 16x8 units scaled by 10.
        assert_eq!(m.count_ones(), 100 * 80);
        assert!(m.get(0, 0) && m.get(99, 79) && !m.get(100, 0));
        assert!(matches!(
            render_variant(&p, &["X".to_string()].into(), 10, 10),
            Err(Error::UnknownRoom(_))
        ));
    }

    #[test]
    fn render_sums_and_monotone() {
        let mut rooms = vec![Room {
            name: "L".into(),
            kind: RoomKind::LivingRoom,
            outline: Polygon::new(vec![
                Point::new(0.0, 0.0),
                Point::new(7.3, 0.0),
                Point::new(7.3, 3.1),
                Point::new(3.9, 3.1),
                Point::new(3.9, 6.0),
                Point::new(0.0, 6.0),
            ])
            .unwrap(),
        }];
        rooms.push(Room {
            name: "B".into(),
            kind: RoomKind::Bedroom,
            outline: Polygon::rect(9.0, 0.5, 13.7, 6.0).unwrap(),
        });
        let p = FloorPlan::new(0.05, rooms).unwrap();
        let framing = Framing::native(&p);
        let per_room = render_rooms(&p, &framing);
        let full = render_subset(&p, &[0, 1], &framing);
        let sum: usize = per_room.iter().map(BinaryMask::count_ones).sum();
        assert_eq!(full.count_ones(), sum);
        let cells_per_unit2 = framing.cells_per_unit.powi(2);
        let ratio = full.count_ones() as f64 / (p.total_area() * cells_per_unit2);
        assert!((0.98..=1.02).contains(&ratio), "{ratio}");
        // Monotone in the included set.
        for (a, b) in full.cells().iter().zip(per_room[0].cells()) {
            assert!(!b || *a);
        }
        assert_eq!(render_subset(&p, &[0, 1], &framing), full);
    }
}
