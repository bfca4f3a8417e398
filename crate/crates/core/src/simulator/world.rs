//! Grid worlds built from a floor plan plus door and target annotations.
//!
//! Plan coordinates map to cells as `(p - plan_min) * resolution + margin +
//! 0.5`, so integer plan corners land on cell centres and every room edge
//! becomes a one-cell wall. Cells outside all rooms are solid.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::floorplan::FloorPlan;
use crate::geometry::{Point, Polygon};
use crate::raster::{fill_polygon, BinaryMask};

use super::Pose;

/// Solid border around the plan, cells.
pub const WORLD_MARGIN: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoorSpec {
    pub id: String,
    pub from: String,
    pub to: String,
    pub segment: [[f64; 2]; 2],
    #[serde(default)]
    pub closed: bool,
}

/// Target position in plan units and the room it lies in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub x: f64,
    pub y: f64,
    pub room: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StartPose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

/// Contents of a world file. Positions are in plan units.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldSpec {
    pub plan: FloorPlan,
    pub resolution_cells_per_unit: f64,
    pub doors: Vec<DoorSpec>,
    pub targets: Vec<Target>,
    pub start: StartPose,
}

#[derive(Serialize, Deserialize)]
struct RawWorld {
    plan: serde_json::Value,
    resolution_cells_per_unit: f64,
    #[serde(default)]
    doors: Vec<DoorSpec>,
    #[serde(default)]
    targets: Vec<Target>,
    start: StartPose,
}

impl WorldSpec {
    pub fn parse(json_text: &str) -> Result<WorldSpec> {
        let raw: RawWorld = serde_json::from_str(json_text).map_err(|e| Error::World(e.to_string()))?;
        let plan = FloorPlan::from_value(raw.plan)?;
        Ok(WorldSpec {
            plan,
            resolution_cells_per_unit: raw.resolution_cells_per_unit,
            doors: raw.doors,
            targets: raw.targets,
            start: raw.start,
        })
    }

    pub fn to_json(&self) -> String {
        let raw = RawWorld {
            plan: self.plan.to_value(),
            resolution_cells_per_unit: self.resolution_cells_per_unit,
            doors: self.doors.clone(),
            targets: self.targets.clone(),
            start: self.start,
        };
        serde_json::to_string_pretty(&raw).expect("world serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Terrain {
    Free,
    Wall,
    /// Door cell; the index refers to `World::doors`.
    Door(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub spec: WorldSpec,
    width: usize,
    height: usize,
    terrain: Vec<Terrain>,
    room_of: Vec<Option<usize>>,
    closed: Vec<bool>,
    /// Target positions in cells with their room index.
    pub targets: Vec<(Point, usize)>,
    pub start: Pose,
}

/// Cells a segment passes through, by dense sampling.
pub fn segment_cells(a: Point, b: Point) -> Vec<(i64, i64)> {
    let n = (a.distance(b) * 8.0).ceil().max(1.0) as usize;
    let mut out: Vec<(i64, i64)> = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let t = k as f64 / n as f64;
        let c = (
            (a.x + (b.x - a.x) * t).floor() as i64,
            (a.y + (b.y - a.y) * t).floor() as i64,
        );
        if out.last() != Some(&c) {
            out.push(c);
        }
    }
    out
}

/// Room interiors and one-cell walls for a set of room outlines already in
/// cell coordinates. Returns per-cell room labels and the wall mask.
pub fn rasterize_rooms(outlines: &[Polygon], width: usize, height: usize) -> (Vec<Option<usize>>, BinaryMask) {
    let mut labels = vec![None; width * height];
    for (i, poly) in outlines.iter().enumerate() {
        let mut m = BinaryMask::new(width, height);
        fill_polygon(&mut m, poly, true);
        for (k, &c) in m.cells().iter().enumerate() {
            if c && labels[k].is_none() {
                labels[k] = Some(i);
            }
        }
    }
    let mut walls = BinaryMask::from_fn(width, height, |x, y| labels[y * width + x].is_none());
    for poly in outlines {
        for (a, b) in poly.edges() {
            for (x, y) in segment_cells(a, b) {
                if x >= 0 && y >= 0 && (x as usize) < width && (y as usize) < height {
                    walls.set(x as usize, y as usize, true);
                }
            }
        }
    }
    (labels, walls)
}

impl World {
    pub fn new(spec: WorldSpec) -> Result<World> {
        let res = spec.resolution_cells_per_unit;
        if !(res.is_finite() && res > 0.0) {
            return Err(Error::World(format!("resolution must be positive, got {res}")));
        }
        let b = spec.plan.bounds();
        let m = WORLD_MARGIN as f64;
        let to_cells = |p: Point| Point::new((p.x - b.min_x) * res + m + 0.5, (p.y - b.min_y) * res + m + 0.5);
        let width = (b.width() * res).ceil() as usize + 2 * WORLD_MARGIN + 1;
        let height = (b.height() * res).ceil() as usize + 2 * WORLD_MARGIN + 1;
        let outlines: Vec<Polygon> = spec
            .plan
            .rooms
            .iter()
            .map(|r| r.outline.map(to_cells))
            .collect::<Result<_>>()?;
        let (room_of, walls) = rasterize_rooms(&outlines, width, height);
        let mut terrain: Vec<Terrain> = walls
            .cells()
            .iter()
            .map(|&w| if w { Terrain::Wall } else { Terrain::Free })
            .collect();

        for (k, d) in spec.doors.iter().enumerate() {
            let from = spec.plan.room_index(&d.from)?;
            let to = spec.plan.room_index(&d.to)?;
            let a = to_cells(Point::new(d.segment[0][0], d.segment[0][1]));
            let c = to_cells(Point::new(d.segment[1][0], d.segment[1][1]));
            let mut opened = 0;
            for (x, y) in segment_cells(a, c) {
                if x < 0 || y < 0 || x as usize >= width || y as usize >= height {
                    continue;
                }
                let i = y as usize * width + x as usize;
                if terrain[i] == Terrain::Wall && matches!(room_of[i], Some(r) if r == from || r == to) {
                    terrain[i] = Terrain::Door(k);
                    opened += 1;
                }
            }
            if opened == 0 {
                return Err(Error::World(format!("door `{}` does not lie on a wall of its rooms", d.id)));
            }
        }
        let closed = spec.doors.iter().map(|d| d.closed).collect();

        let mut world = World {
            width,
            height,
            terrain,
            room_of,
            closed,
            targets: Vec::new(),
            start: Pose::new(0.0, 0.0, 0.0),
            spec,
        };
        let s = to_cells(Point::new(world.spec.start.x, world.spec.start.y));
        world.start = Pose::new(s.x, s.y, world.spec.start.heading);
        if world.is_blocked(s.x.floor() as i64, s.y.floor() as i64) {
            return Err(Error::World("start pose is not in free space".into()));
        }
        for t in &world.spec.targets {
            let room = world.spec.plan.room_index(&t.room)?;
            let p = to_cells(Point::new(t.x, t.y));
            let (cx, cy) = (p.x.floor() as i64, p.y.floor() as i64);
            if world.is_blocked(cx, cy) || world.room_at(cx, cy) != Some(room) {
                return Err(Error::World(format!("target at ({}, {}) is not inside room `{}`", t.x, t.y, t.room)));
            }
            world.targets.push((p, room));
        }
        Ok(world)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn terrain(&self, x: usize, y: usize) -> Terrain {
        self.terrain[y * self.width + x]
    }

    /// Walls, closed doors and everything off the grid.
    pub fn is_blocked(&self, x: i64, y: i64) -> bool {
        if x < 0 || y < 0 || x as usize >= self.width || y as usize >= self.height {
            return true;
        }
        match self.terrain[y as usize * self.width + x as usize] {
            Terrain::Free => false,
            Terrain::Wall => true,
            Terrain::Door(k) => self.closed[k],
        }
    }

    /// Room whose interior contains the cell; walls report the room they
    /// were drawn for.
    pub fn room_at(&self, x: i64, y: i64) -> Option<usize> {
        if x < 0 || y < 0 || x as usize >= self.width || y as usize >= self.height {
            return None;
        }
        self.room_of[y as usize * self.width + x as usize]
    }

    /// Room of a free (non-wall, non-door) cell.
    pub fn interior_room_at(&self, x: i64, y: i64) -> Option<usize> {
        if self.is_blocked(x, y) || matches!(self.terrain(x as usize, y as usize), Terrain::Door(_)) {
            return None;
        }
        self.room_at(x, y)
    }

    pub fn set_door_closed(&mut self, id: &str, closed: bool) -> Result<()> {
        let k = self
            .spec
            .doors
            .iter()
            .position(|d| d.id == id)
            .ok_or_else(|| Error::World(format!("unknown door `{id}`")))?;
        self.closed[k] = closed;
        self.spec.doors[k].closed = closed;
        Ok(())
    }

    /// Adds debris: the listed cells become walls.
    pub fn with_extra_walls(mut self, cells: &[(usize, usize)]) -> World {
        for &(x, y) in cells {
            if x < self.width && y < self.height {
                self.terrain[y * self.width + x] = Terrain::Wall;
            }
        }
        self
    }

    pub fn blocked_mask(&self) -> BinaryMask {
        BinaryMask::from_fn(self.width, self.height, |x, y| self.is_blocked(x as i64, y as i64))
    }

    /// Plan units to world cells.
    pub fn to_cells(&self, p: Point) -> Point {
        let b = self.spec.plan.bounds();
        let res = self.spec.resolution_cells_per_unit;
        let m = WORLD_MARGIN as f64;
        Point::new((p.x - b.min_x) * res + m + 0.5, (p.y - b.min_y) * res + m + 0.5)
    }

    /// Rooms whose interior is 4-connected to the start through passable cells.
    pub fn reachable_rooms(&self) -> Vec<bool> {
        let w = self.width;
        let mut seen = vec![false; w * self.height];
        let (sx, sy) = (self.start.x.floor() as usize, self.start.y.floor() as usize);
        let mut queue = VecDeque::from([(sx, sy)]);
        seen[sy * w + sx] = true;
        let mut rooms = vec![false; self.spec.plan.rooms.len()];
        while let Some((x, y)) = queue.pop_front() {
            if let Some(r) = self.interior_room_at(x as i64, y as i64) {
                rooms[r] = true;
            }
            for (dx, dy) in [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)] {
                let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                if !self.is_blocked(nx, ny) && !seen[ny as usize * w + nx as usize] {
                    seen[ny as usize * w + nx as usize] = true;
                    queue.push_back((nx as usize, ny as usize));
                }
            }
        }
        rooms
    }
}
