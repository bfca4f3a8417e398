//! Ideal LiDAR: grid ray casting and occupancy integration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{Cell, OccupancyGrid};

use super::world::World;
use super::Pose;

/// Ties between the x and y crossing closer than this count as passing
/// exactly through a cell corner.
const CORNER_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Beam {
    pub angle: f64,
    pub range: f64,
    /// False when the beam ran out at `max_range`.
    pub hit: bool,
}

/// Walks the cells a ray passes through, starting with the origin cell.
/// `visit` gets each entered cell and its entry distance. Returns the
/// distance to and index of the first blocked cell closer than `max_t`.
/// A ray through a corner is stopped if either side cell is blocked.
pub(crate) fn cast(
    ox: f64,
    oy: f64,
    angle: f64,
    max_t: f64,
    blocked: impl Fn(i64, i64) -> bool,
    mut visit: impl FnMut(i64, i64, f64),
) -> Option<(f64, (i64, i64))> {
    let (dy, dx) = angle.sin_cos();
    let (mut ix, mut iy) = (ox.floor() as i64, oy.floor() as i64);
    let sx: i64 = if dx > 0.0 { 1 } else if dx < 0.0 { -1 } else { 0 };
    let sy: i64 = if dy > 0.0 { 1 } else if dy < 0.0 { -1 } else { 0 };
    visit(ix, iy, 0.0);
    loop {
        let tx = if sx == 0 {
            f64::INFINITY
        } else {
            ((ix + (sx > 0) as i64) as f64 - ox) / dx
        };
        let ty = if sy == 0 {
            f64::INFINITY
        } else {
            ((iy + (sy > 0) as i64) as f64 - oy) / dy
        };
        let t = tx.min(ty);
        if t >= max_t {
            return None;
        }
        if (tx - ty).abs() <= CORNER_EPS {
            if blocked(ix + sx, iy) {
                return Some((t, (ix + sx, iy)));
            }
            if blocked(ix, iy + sy) {
                return Some((t, (ix, iy + sy)));
            }
            ix += sx;
            iy += sy;
        } else if tx < ty {
            ix += sx;
        } else {
            iy += sy;
        }
        if blocked(ix, iy) {
            return Some((t, (ix, iy)));
        }
        visit(ix, iy, t);
    }
}

/// `n_beams` evenly spaced beams starting at the pose heading. Ranges are
/// distances to the boundary of the first wall or closed-door cell.
pub fn raycast_scan(world: &World, pose: Pose, n_beams: usize, max_range: f64) -> Result<Vec<Beam>> {
    let (cx, cy) = pose.cell();
    if !(pose.x.is_finite() && pose.y.is_finite()) || world.is_blocked(cx, cy) {
        return Err(Error::InvalidPose { x: pose.x, y: pose.y });
    }
    Ok((0..n_beams)
        .map(|k| {
            let angle = pose.heading + std::f64::consts::TAU * k as f64 / n_beams as f64;
            match cast(pose.x, pose.y, angle, max_range, |x, y| world.is_blocked(x, y), |_, _, _| {}) {
                Some((t, _)) => Beam { angle, range: t, hit: true },
                None => Beam {
                    angle,
                    range: max_range,
                    hit: false,
                },
            }
        })
        .collect())
}

/// True when the straight segment between two points crosses no blocked cell.
pub fn line_of_sight(world: &World, from: (f64, f64), to: (f64, f64)) -> bool {
    let (dx, dy) = (to.0 - from.0, to.1 - from.1);
    let len = dx.hypot(dy);
    if world.is_blocked(from.0.floor() as i64, from.1.floor() as i64) {
        return false;
    }
    if len == 0.0 {
        return true;
    }
    cast(from.0, from.1, dy.atan2(dx), len, |x, y| world.is_blocked(x, y), |_, _, _| {}).is_none()
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ScanUpdate {
    /// Cells that went from unknown to known.
    pub newly_known: usize,
    /// Cells marked occupied by this scan that were not occupied before.
    pub newly_occupied: Vec<(usize, usize)>,
}

/// Cell a beam ended in, seen from `pose`. Beams stop on cell faces, so the
/// end point is moved onto the face it most likely hit: the grid line that
/// is nearest both along the beam and in position. When those disagree the
/// hit is ambiguous under a pose error and `None` is returned; from the
/// true pose they always agree.
pub fn beam_end_cell(pose: Pose, beam: &Beam) -> Option<(i64, i64)> {
    let (s, c) = beam.angle.sin_cos();
    let (px, py) = (pose.x + beam.range * c, pose.y + beam.range * s);
    let (rx, ry) = (px.round() - px, py.round() - py);
    let along = |r: f64, d: f64| if d.abs() < 1e-12 { f64::INFINITY } else { (r / d).abs() };
    let by_beam = along(rx, c) <= along(ry, s);
    let by_position = rx.abs() <= ry.abs();
    if by_beam != by_position && (rx.abs() - ry.abs()).abs() > 1e-9 {
        return None;
    }
    let t = if by_beam { rx / c } else { ry / s };
    let t = if t.is_finite() { t } else { 0.0 } + 1e-7;
    Some(((px + t * c).floor() as i64, (py + t * s).floor() as i64))
}

/// Cells traversed before the beam end become free, then the end cells
/// of hitting beams become occupied. Later scans overwrite earlier ones;
/// known cells never return to unknown.
pub fn integrate_scan(map: &mut OccupancyGrid, pose: Pose, scan: &[Beam]) -> ScanUpdate {
    let mut update = ScanUpdate::default();
    let mark = |map: &mut OccupancyGrid, x: i64, y: i64, c: Cell, update: &mut ScanUpdate| {
        if !map.in_bounds(x, y) {
            return;
        }
        let (x, y) = (x as usize, y as usize);
        let old = map.get(x, y);
        if old == Cell::Unknown {
            update.newly_known += 1;
        }
        if c == Cell::Occupied && old != Cell::Occupied {
            update.newly_occupied.push((x, y));
        }
        map.set(x, y, c);
    };
    for beam in scan {
        cast(
            pose.x,
            pose.y,
            beam.angle,
            beam.range,
            |_, _| false,
            |x, y, _| mark(map, x, y, Cell::Free, &mut update),
        );
    }
    for beam in scan.iter().filter(|b| b.hit) {
        if let Some((x, y)) = beam_end_cell(pose, beam) {
            mark(map, x, y, Cell::Occupied, &mut update);
        }
    }
    update.newly_occupied.retain(|&(x, y)| map.get(x, y) == Cell::Occupied);
    update.newly_occupied.sort_unstable();
    update.newly_occupied.dedup();
    update
}

/// Occupancy map that weighs evidence across scans: within one scan hits
/// override passes as in `integrate_scan`, and across scans a cell is
/// occupied while it has been hit at least as often as it has been passed
/// through.
#[derive(Debug, Clone, PartialEq)]
pub struct EvidenceMap {
    grid: OccupancyGrid,
    hits: Vec<u32>,
    passes: Vec<u32>,
}

impl EvidenceMap {
    pub fn new(width: usize, height: usize) -> EvidenceMap {
        EvidenceMap {
            grid: OccupancyGrid::new(width, height),
            hits: vec![0; width * height],
            passes: vec![0; width * height],
        }
    }

    pub fn grid(&self) -> &OccupancyGrid {
        &self.grid
    }

    pub fn integrate(&mut self, pose: Pose, scan: &[Beam]) -> ScanUpdate {
        let mut single = OccupancyGrid::new(self.grid.width(), self.grid.height());
        integrate_scan(&mut single, pose, scan);
        let mut update = ScanUpdate::default();
        let w = self.grid.width();
        for (i, &c) in single.cells().iter().enumerate() {
            match c {
                Cell::Unknown => continue,
                Cell::Occupied => self.hits[i] += 1,
                Cell::Free => self.passes[i] += 1,
            }
            if self.settle(i % w, i / w, &mut update) {
                update.newly_known += 1;
            }
        }
        update.newly_occupied.sort_unstable();
        update
    }

    /// Records an obstacle sensed by contact, which outweighs every pass
    /// seen so far.
    pub fn add_contact(&mut self, x: usize, y: usize) -> ScanUpdate {
        let mut update = ScanUpdate::default();
        let i = y * self.grid.width() + x;
        self.hits[i] = self.hits[i].max(self.passes[i]) + 1;
        if self.settle(x, y, &mut update) {
            update.newly_known += 1;
        }
        update
    }

    /// Recomputes a cell's state from its counts; true if it was unknown.
    fn settle(&mut self, x: usize, y: usize, update: &mut ScanUpdate) -> bool {
        let i = y * self.grid.width() + x;
        let old = self.grid.get(x, y);
        let new = if self.hits[i] >= self.passes[i] { Cell::Occupied } else { Cell::Free };
        if new == Cell::Occupied && old != Cell::Occupied {
            update.newly_occupied.push((x, y));
        }
        self.grid.set(x, y, new);
        old == Cell::Unknown
    }
}

impl std::ops::Deref for EvidenceMap {
    type Target = OccupancyGrid;

    fn deref(&self) -> &OccupancyGrid {
        &self.grid
    }
}
