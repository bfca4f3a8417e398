//! Mission drivers. `run_fr_slam` navigates on the registered floor plan,
//! re-registering and re-localizing whenever its path is obstructed or it
//! has travelled the relocation distance. `run_baseline_explorer` searches
//! by frontier exploration on its own map.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::d4::{Flip, Rotation, D4};
use crate::error::{Error, Result};
use crate::floorplan::FloorPlan;
use crate::geometry::Point;
use crate::raster::{dilate, erode, BinaryMask, Cell, OccupancyGrid};
use crate::registration::{place, register, Candidate};

use super::localize::{local_structure, localize, refine_subcell};
use super::motion::{step_motion, MotionConfig};
use super::motion_map::{inset, local_room_region, refine_frame, registration_mask, MotionMap, PlanFrame};
use super::planning::{distance_field, plan_path, CostGrid};
use super::scan::{cast, line_of_sight, raycast_scan, Beam, EvidenceMap, ScanUpdate};
use super::world::{segment_cells, World};
use super::{wrap_angle, Pose};

/// Surcharges at Chebyshev distance 1 and 2 from blocked cells.
const INFLATION: [f64; 2] = [4.0, 1.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// The number of targets and the rooms they are in are known; stop
    /// once all are found.
    KnownRooms,
    /// Nothing is known about the targets; stop at full coverage.
    UnknownCount,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MissionConfig {
    pub motion: MotionConfig,
    /// Control period, seconds.
    pub dt: f64,
    pub n_beams: usize,
    /// Cells.
    pub max_range: f64,
    /// A target is found within this many cells, in line of sight.
    pub detection_radius: f64,
    /// Cells.
    pub localize_radius: f64,
    /// Mission time charged per registration, seconds.
    pub registration_cost_s: f64,
    pub time_cap_s: f64,
    pub scenario: Scenario,
}

impl Default for MissionConfig {
    fn default() -> Self {
        MissionConfig {
            motion: MotionConfig::default(),
            dt: 0.25,
            n_beams: 360,
            max_range: 40.0,
            detection_radius: 3.0,
            localize_radius: 3.0,
            registration_cost_s: 1.0,
            time_cap_s: 1800.0,
            scenario: Scenario::KnownRooms,
        }
    }
}

impl MissionConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::World(format!("invalid mission config: {m}")));
        self.motion.validate().map_err(|m| Error::World(format!("invalid mission config: {m}")))?;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt must be positive");
        }
        if self.n_beams == 0 || self.max_range.is_nan() || self.max_range <= 0.0 {
            return bad("scanner needs beams and a positive range");
        }
        if self.detection_radius.is_nan() || self.detection_radius < 1.0 {
            return bad("detection radius must be at least one cell");
        }
        if !(self.localize_radius >= 0.0 && self.registration_cost_s >= 0.0 && self.time_cap_s > 0.0) {
            return bad("radii, costs and the time cap must be non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegistrationCause {
    Initial,
    Obstruction,
    Distance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum LogEvent {
    Registration {
        cause: RegistrationCause,
        variant: Vec<String>,
        rot: Rotation,
        flip: Flip,
        iou: f64,
    },
    RegistrationFailed {
        cause: RegistrationCause,
    },
    Localized {
        dx: f64,
        dy: f64,
    },
    LocalizationFailed,
    Replan {
        goal: (usize, usize),
        length: f64,
    },
    Collision,
    Obstruction,
    TargetFound {
        index: usize,
        room: String,
    },
}

/// State after one control step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub step: usize,
    pub time_s: f64,
    pub true_pose: Pose,
    pub est_pose: Pose,
    /// Odometry distance of this step, cells.
    pub travel: f64,
    /// Distance since the last registration.
    pub d: f64,
    /// Remaining planned path length.
    pub s: f64,
    pub room: Option<String>,
    pub events: Vec<LogEvent>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissionStatus {
    Completed,
    TimedOut,
    /// Nothing left to search while targets are still missing.
    Exhausted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    FrSlam,
    Baseline,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionSummary {
    pub mode: Mode,
    pub scenario: Scenario,
    pub status: MissionStatus,
    pub steps: usize,
    pub total_time_s: f64,
    pub distance_travelled: f64,
    pub replans: usize,
    pub registrations: usize,
    pub obstruction_registrations: usize,
    pub distance_registrations: usize,
    pub localizations: usize,
    pub collisions: usize,
    pub targets_found: usize,
    pub targets_total: usize,
    pub rooms_visited: Vec<String>,
    /// Measured time spent inside registration, seconds. Not deterministic.
    pub register_wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MissionLog {
    pub trajectory: Vec<LogRecord>,
    pub summary: MissionSummary,
}

impl MissionLog {
    /// One JSON object per record.
    pub fn to_json_lines(&self) -> String {
        let mut s = String::new();
        for r in &self.trajectory {
            s.push_str(&serde_json::to_string(r).expect("records serialize"));
            s.push('\n');
        }
        s
    }

    pub fn is_timeout(&self) -> bool {
        self.summary.status == MissionStatus::TimedOut
    }
}

struct Route {
    pts: Vec<Point>,
    next: usize,
    /// Cells along each leg, tagged with the leg's index in `pts`.
    cells: Vec<(usize, usize, usize)>,
    goal: Option<(usize, usize)>,
}

impl Route {
    fn empty() -> Route {
        Route {
            pts: Vec::new(),
            next: 0,
            cells: Vec::new(),
            goal: None,
        }
    }

    fn done(&self) -> bool {
        self.next >= self.pts.len()
    }

    fn remaining(&self, from: &Pose) -> f64 {
        if self.done() {
            return 0.0;
        }
        let here = Point::new(from.x, from.y);
        let mut s = here.distance(self.pts[self.next]);
        for k in self.next + 1..self.pts.len() {
            s += self.pts[k - 1].distance(self.pts[k]);
        }
        s
    }

    fn crosses(&self, cells: &[(usize, usize)]) -> bool {
        self.cells
            .iter()
            .any(|&(x, y, leg)| leg >= self.next && cells.binary_search(&(x, y)).is_ok())
    }
}

fn centre(c: (usize, usize)) -> Point {
    Point::new(c.0 as f64 + 0.5, c.1 as f64 + 0.5)
}

/// Shortcuts a cell path with straight legs that stay on unblocked cells
/// and never pay more surcharge than the cells they replace.
fn smooth(grid: &CostGrid, from: Point, cells: &[(usize, usize)]) -> Route {
    let mut raw = vec![from];
    raw.extend(cells.iter().skip(1).map(|&c| centre(c)));
    let extra: Vec<f64> = cells.iter().map(|&(x, y)| grid.extra(x, y)).collect();
    let clear = |a: Point, b: Point, limit: f64| {
        segment_cells(a, b).iter().all(|&(x, y)| !grid.is_blocked(x, y) && grid.extra(x as usize, y as usize) <= limit + 1e-12)
    };
    let mut pts = Vec::new();
    let mut i = 0;
    while i + 1 < raw.len() {
        let mut best = i + 1;
        let mut limit = extra[i].max(extra[i + 1]);
        for j in i + 2..raw.len() {
            limit = limit.max(extra[j]);
            if !clear(raw[i], raw[j], limit) {
                break;
            }
            best = j;
        }
        pts.push(raw[best]);
        i = best;
    }
    let mut legs = Vec::new();
    let mut prev = from;
    for (k, &p) in pts.iter().enumerate() {
        for (x, y) in segment_cells(prev, p) {
            if x >= 0 && y >= 0 {
                legs.push((x as usize, y as usize, k));
            }
        }
        prev = p;
    }
    Route {
        pts,
        next: 0,
        cells: legs,
        goal: cells.last().copied(),
    }
}

/// Nearest unblocked cell within three cells, the cell itself first.
fn free_start(grid: &CostGrid, c: (i64, i64)) -> Option<(usize, usize)> {
    let mut probes: Vec<(i64, i64)> = (-3..=3).flat_map(|dy| (-3..=3).map(move |dx| (dx, dy))).collect();
    probes.sort_by_key(|&(dx, dy)| (dx * dx + dy * dy, dy, dx));
    probes
        .into_iter()
        .map(|(dx, dy)| (c.0 + dx, c.1 + dy))
        .find(|&(x, y)| !grid.is_blocked(x, y))
        .map(|(x, y)| (x as usize, y as usize))
}

struct Robot<'a> {
    world: &'a World,
    cfg: MissionConfig,
    rng: ChaCha8Rng,
    truth: Pose,
    est: Pose,
    map: EvidenceMap,
    searched: Vec<bool>,
    found: Vec<bool>,
    scan: Vec<Beam>,
    time: f64,
    d: f64,
    route: Route,
    events: Vec<LogEvent>,
    trajectory: Vec<LogRecord>,
    summary: MissionSummary,
    step: usize,
    travel: f64,
    bumped: Option<(usize, usize)>,
}

impl<'a> Robot<'a> {
    fn new(world: &'a World, cfg: &MissionConfig, mode: Mode) -> Result<Robot<'a>> {
        cfg.validate()?;
        let (w, h) = (world.width(), world.height());
        let summary = MissionSummary {
            mode,
            scenario: cfg.scenario,
            status: MissionStatus::Completed,
            steps: 0,
            total_time_s: 0.0,
            distance_travelled: 0.0,
            replans: 0,
            registrations: 0,
            obstruction_registrations: 0,
            distance_registrations: 0,
            localizations: 0,
            collisions: 0,
            targets_found: 0,
            targets_total: world.targets.len(),
            rooms_visited: Vec::new(),
            register_wall_time_s: 0.0,
        };
        Ok(Robot {
            world,
            cfg: *cfg,
            rng: ChaCha8Rng::seed_from_u64(cfg.motion.rng_seed),
            truth: world.start,
            est: world.start,
            map: EvidenceMap::new(w, h),
            searched: vec![false; w * h],
            found: vec![false; world.targets.len()],
            scan: Vec::new(),
            time: 0.0,
            d: 0.0,
            route: Route::empty(),
            events: Vec::new(),
            trajectory: Vec::new(),
            summary,
            step: 0,
            travel: 0.0,
            bumped: None,
        })
    }

    fn all_found(&self) -> bool {
        self.found.iter().all(|&f| f)
    }

    fn take_scan(&mut self) -> Result<()> {
        self.scan = raycast_scan(self.world, self.truth, self.cfg.n_beams, self.cfg.max_range)?;
        Ok(())
    }

    /// Integrates the latest scan at the estimated pose, then updates the
    /// searched cells and target detections.
    fn integrate(&mut self) -> ScanUpdate {
        let update = self.map.integrate(self.est, &self.scan);
        let r = self.cfg.detection_radius - 1.0;
        let (cx, cy) = self.est.cell();
        let reach = r.ceil() as i64;
        for y in cy - reach..=cy + reach {
            for x in cx - reach..=cx + reach {
                if !self.map.in_bounds(x, y) {
                    continue;
                }
                let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
                let dist = (px - self.est.x).hypot(py - self.est.y);
                if dist > r {
                    continue;
                }
                let map = &self.map;
                let occluded = cast(
                    self.est.x,
                    self.est.y,
                    (py - self.est.y).atan2(px - self.est.x),
                    dist,
                    |ox, oy| map.in_bounds(ox, oy) && map.get(ox as usize, oy as usize) == Cell::Occupied,
                    |_, _, _| {},
                )
                .is_some();
                if !occluded {
                    self.searched[y as usize * self.map.width() + x as usize] = true;
                }
            }
        }
        for (i, &(p, room)) in self.world.targets.iter().enumerate() {
            if self.found[i] {
                continue;
            }
            let near = (p.x - self.truth.x).hypot(p.y - self.truth.y) <= self.cfg.detection_radius;
            if near && line_of_sight(self.world, (self.truth.x, self.truth.y), (p.x, p.y)) {
                self.found[i] = true;
                self.summary.targets_found += 1;
                self.events.push(LogEvent::TargetFound {
                    index: i,
                    room: self.world.spec.plan.rooms[room].name.clone(),
                });
            }
        }
        update
    }

    /// One control period towards the next waypoint. Returns whether the
    /// robot bumped into something.
    fn drive(&mut self) -> bool {
        self.travel = 0.0;
        self.bumped = None;
        while !self.route.done() {
            let p = self.route.pts[self.route.next];
            if (p.x - self.est.x).hypot(p.y - self.est.y) > 1e-9 {
                break;
            }
            self.route.next += 1;
        }
        if self.route.done() {
            return false;
        }
        let p = self.route.pts[self.route.next];
        let dist = (p.x - self.est.x).hypot(p.y - self.est.y);
        let step = dist.min(self.cfg.motion.speed * self.cfg.dt);
        let heading = (p.y - self.est.y).atan2(p.x - self.est.x);
        let u = (step / self.cfg.dt, wrap_angle(heading - self.est.heading) / self.cfg.dt);
        let moved = step_motion(self.truth, u, self.cfg.dt, &self.cfg.motion, &mut self.rng);
        let (mx, my) = moved.cell();
        if self.world.is_blocked(mx, my) || !line_of_sight(self.world, (self.truth.x, self.truth.y), (moved.x, moved.y)) {
            self.summary.collisions += 1;
            self.events.push(LogEvent::Collision);
            // The bumper reports an obstacle just ahead.
            let (bx, by) = (
                (self.est.x + 0.75 * heading.cos()).floor() as i64,
                (self.est.y + 0.75 * heading.sin()).floor() as i64,
            );
            if (bx, by) != self.est.cell() && self.map.in_bounds(bx, by) {
                self.map.add_contact(bx as usize, by as usize);
                self.bumped = Some((bx as usize, by as usize));
            }
            return true;
        }
        self.truth = moved;
        self.est = Pose::new(self.est.x + step * heading.cos(), self.est.y + step * heading.sin(), heading);
        if step >= dist - 1e-12 {
            self.est.x = p.x;
            self.est.y = p.y;
        }
        self.travel = step;
        self.d += step;
        self.summary.distance_travelled += step;
        false
    }

    fn relocalize(&mut self, reference: &BinaryMask) -> Result<()> {
        let half = self.cfg.max_range.ceil() as usize + 1;
        let patch = local_structure(self.est, &self.scan, half);
        match localize(&patch, reference, self.est, self.cfg.localize_radius) {
            Ok(p) => {
                let p = refine_subcell(p, &self.scan, reference);
                self.events.push(LogEvent::Localized {
                    dx: p.x - self.est.x,
                    dy: p.y - self.est.y,
                });
                self.summary.localizations += 1;
                self.est = p;
                Ok(())
            }
            Err(Error::LocalizationFailed) => {
                self.events.push(LogEvent::LocalizationFailed);
                Ok(())
            }
            Err(e) => Err(e),
        }
    }

    fn set_route(&mut self, grid: &CostGrid, start: (usize, usize), goal: Option<(usize, usize)>) -> Result<()> {
        self.route = match goal {
            Some(g) => {
                let cells = plan_path(grid, start, g)?;
                smooth(grid, Point::new(self.est.x, self.est.y), &cells)
            }
            None => Route::empty(),
        };
        if let Some(g) = self.route.goal {
            self.summary.replans += 1;
            self.events.push(LogEvent::Replan {
                goal: g,
                length: self.route.remaining(&self.est),
            });
        }
        Ok(())
    }

    fn record(&mut self) {
        let (cx, cy) = self.truth.cell();
        let room = self.world.interior_room_at(cx, cy).map(|r| self.world.spec.plan.rooms[r].name.clone());
        if let Some(name) = &room {
            if !self.summary.rooms_visited.contains(name) {
                self.summary.rooms_visited.push(name.clone());
            }
        }
        self.trajectory.push(LogRecord {
            step: self.step,
            time_s: self.time,
            true_pose: self.truth,
            est_pose: self.est,
            travel: self.travel,
            d: self.d,
            s: self.route.remaining(&self.est),
            room,
            events: std::mem::take(&mut self.events),
        });
    }

    fn finish(mut self, status: MissionStatus) -> MissionLog {
        if let Some(last) = self.trajectory.last_mut() {
            last.events.append(&mut self.events);
        }
        self.summary.status = status;
        self.summary.steps = self.step;
        self.summary.total_time_s = self.time;
        MissionLog {
            trajectory: self.trajectory,
            summary: self.summary,
        }
    }
}

struct Registrar<'p> {
    plan: &'p FloorPlan,
    region: BinaryMask,
    motion_map: Option<MotionMap>,
    current: Option<Candidate>,
}

impl Registrar<'_> {
    fn grow_region(&mut self, robot: &Robot) {
        let free = robot.map.mask_of(|c| c == Cell::Free);
        if let Some(part) = local_room_region(&free, robot.est.cell()) {
            self.region.union_with(&part).expect("same grid");
        }
    }

    fn register(&mut self, robot: &mut Robot, cause: RegistrationCause) -> Result<()> {
        let target = registration_mask(&self.region);
        robot.time += robot.cfg.registration_cost_s;
        robot.d = 0.0;
        robot.summary.registrations += 1;
        match cause {
            RegistrationCause::Obstruction => robot.summary.obstruction_registrations += 1,
            RegistrationCause::Distance => robot.summary.distance_registrations += 1,
            RegistrationCause::Initial => {}
        }
        let clock = Instant::now();
        let result = if target.is_empty() {
            Err(Error::EmptyStructure)
        } else {
            register(&target, self.plan)
        };
        let built = result.and_then(|res| {
            let mut close: Vec<&Candidate> = res.candidates.iter().filter(|c| c.iou >= res.iou - VERIFY_MARGIN).collect();
            close.sort_by(|a, b| b.iou.total_cmp(&a.iou));
            close.truncate(VERIFY_COUNT);
            let mut best: Option<(usize, &Candidate, MotionMap)> = match (&self.current, &self.motion_map) {
                (Some(c), Some(m)) => Some((disagreement(&robot.map, m), c, m.clone())),
                _ => None,
            };
            for c in close {
                let rooms = c.variant.iter().map(|n| self.plan.room_index(n)).collect::<Result<Vec<_>>>()?;
                let placement = place(&target, self.plan, &rooms, D4::new(c.rot, c.flip))?;
                let frame = refine_frame(self.plan, &rooms, PlanFrame::new(placement), &target)?;
                let frame = inset(self.plan, &rooms, frame, 0.5);
                let map = MotionMap::build(self.plan, frame, target.width(), target.height())?;
                let conflicts = disagreement(&robot.map, &map);
                if best.as_ref().is_none_or(|b| conflicts < b.0) {
                    best = Some((conflicts, c, map));
                }
            }
            let (_, c, map) = best.ok_or(Error::NoMatch)?;
            Ok((c.clone(), map))
        });
        robot.summary.register_wall_time_s += clock.elapsed().as_secs_f64();
        match built {
            Ok((c, map)) => {
                robot.events.push(LogEvent::Registration {
                    cause,
                    variant: c.variant.clone(),
                    rot: c.rot,
                    flip: c.flip,
                    iou: c.iou,
                });
                self.current = Some(c);
                self.motion_map = Some(map);
                Ok(())
            }
            Err(Error::NoMatch | Error::EmptyStructure) => {
                robot.events.push(LogEvent::RegistrationFailed { cause });
                Ok(())
            }
            Err(e) => Err(e),
        }
    }
}

/// Candidates this close to the best IoU are checked against the map.
const VERIFY_MARGIN: f64 = 0.03;
const VERIFY_COUNT: usize = 8;

/// Cells where the map and the motion map disagree by more than a cell:
/// observed obstacles with no plan wall next to them, and plan walls
/// running through the middle of observed free space.
fn disagreement(map: &OccupancyGrid, mm: &MotionMap) -> usize {
    let near_wall = dilate(&mm.walls, 1);
    let free = map.mask_of(|c| c == Cell::Free);
    let open_space = erode(&free, 1);
    (0..map.height())
        .flat_map(|y| (0..map.width()).map(move |x| (x, y)))
        .filter(|&(x, y)| match map.get(x, y) {
            Cell::Occupied => !near_wall.get(x, y),
            Cell::Free => mm.walls.get(x, y) && open_space.get(x, y),
            Cell::Unknown => false,
        })
        .count()
}

/// Planning grid on the motion map: observed obstacles block, and plan
/// walls block unless the robot has seen the cell free.
fn fr_grid(map: &OccupancyGrid, mm: Option<&MotionMap>) -> CostGrid {
    let mut blocked = BinaryMask::from_fn(map.width(), map.height(), |x, y| match map.get(x, y) {
        Cell::Occupied => true,
        Cell::Free => false,
        Cell::Unknown => mm.is_none_or(|m| m.walls.get(x, y)),
    });
    // A doorway seen blocked anywhere is taken to be closed.
    for door in mm.iter().flat_map(|m| &m.doorways) {
        if door.iter().any(|&(x, y)| map.get(x, y) == Cell::Occupied) {
            for &(x, y) in door {
                if map.get(x, y) == Cell::Unknown {
                    blocked.set(x, y, true);
                }
            }
        }
    }
    let mut grid = CostGrid::from_mask(&blocked);
    grid.inflate(&INFLATION);
    grid
}

fn wanted_rooms(robot: &Robot, plan: &FloorPlan) -> Vec<usize> {
    let mut rooms: Vec<usize> = match robot.cfg.scenario {
        Scenario::KnownRooms => robot
            .world
            .targets
            .iter()
            .zip(&robot.found)
            .filter(|(_, &f)| !f)
            .filter_map(|(&(_, r), _)| plan.room_index(&robot.world.spec.plan.rooms[r].name).ok())
            .collect(),
        Scenario::UnknownCount => (0..plan.rooms.len()).collect(),
    };
    rooms.sort_unstable();
    rooms.dedup();
    rooms
}

fn fr_replan(robot: &mut Robot, reg: &Registrar) -> Result<()> {
    let mm = reg.motion_map.as_ref();
    let grid = fr_grid(&robot.map, mm);
    let Some(start) = free_start(&grid, robot.est.cell()) else {
        return robot.set_route(&grid, (0, 0), None);
    };
    let field = distance_field(&grid, start)?;
    let w = grid.width();
    let cost = goal_cost(robot, &field, w);
    let pick = |rooms: &[usize]| -> Option<(usize, usize)> {
        let mm = mm?;
        (0..field.len())
            .filter(|&i| field[i].is_finite() && !robot.searched[i])
            .filter(|&i| mm.room_at(i % w, i / w).is_some_and(|r| rooms.contains(&r)))
            .min_by(|&a, &b| cost(a).total_cmp(&cost(b)).then(a.cmp(&b)))
            .map(|i| (i % w, i / w))
    };
    let wanted = wanted_rooms(robot, reg.plan);
    let goal = pick(&wanted).or_else(|| {
        if robot.cfg.scenario == Scenario::UnknownCount {
            return None;
        }
        let all: Vec<usize> = (0..reg.plan.rooms.len()).collect();
        // Every plan room is searched and targets are missing, so the
        // placement misses part of the building: search what has been seen.
        pick(&all).or_else(|| {
            (0..field.len())
                .filter(|&i| field[i].is_finite() && !robot.searched[i] && robot.map.get(i % w, i / w) == Cell::Free)
                .min_by(|&a, &b| cost(a).total_cmp(&cost(b)).then(a.cmp(&b)))
                .map(|i| (i % w, i / w))
        })
    });
    robot.set_route(&grid, start, goal)
}

fn goal_stale(robot: &Robot, mm: Option<&MotionMap>, wanted: &[usize]) -> bool {
    let Some(g) = robot.route.goal else { return true };
    if robot.route.done() || robot.searched[g.1 * robot.map.width() + g.0] {
        return true;
    }
    // A goal in a room that no longer holds missing targets is dropped,
    // unless every wanted room has been searched already.
    match (robot.cfg.scenario, mm.and_then(|m| m.room_at(g.0, g.1))) {
        (Scenario::KnownRooms, Some(r)) => !wanted.contains(&r) && !wanted.is_empty() && {
            let w = robot.map.width();
            mm.is_some_and(|m| (0..robot.searched.len()).any(|i| !robot.searched[i] && m.room_at(i % w, i / w).is_some_and(|q| wanted.contains(&q))))
        },
        _ => false,
    }
}

/// Plan-guided search: register the plan on the first scan, then follow
/// A* paths on the motion map, re-registering on obstruction or after
/// travelling the relocation distance.
pub fn run_fr_slam(world: &World, plan: &FloorPlan, cfg: &MissionConfig) -> Result<MissionLog> {
    let mut robot = Robot::new(world, cfg, Mode::FrSlam)?;
    let mut reg = Registrar {
        plan,
        region: BinaryMask::new(world.width(), world.height()),
        motion_map: None,
        current: None,
    };
    robot.take_scan()?;
    robot.integrate();
    reg.grow_region(&robot);
    reg.register(&mut robot, RegistrationCause::Initial)?;
    if let Some(mm) = &reg.motion_map {
        // The first scan was integrated at the nominal start pose; redo it
        // from the pose localized on the plan.
        robot.relocalize(&mm.walls.clone())?;
        robot.map = EvidenceMap::new(world.width(), world.height());
        robot.integrate();
    }
    fr_replan(&mut robot, &reg)?;
    robot.record();

    loop {
        if cfg.scenario == Scenario::KnownRooms && robot.all_found() {
            return Ok(robot.finish(MissionStatus::Completed));
        }
        if robot.route.goal.is_none() {
            let status = if cfg.scenario == Scenario::UnknownCount {
                MissionStatus::Completed
            } else {
                MissionStatus::Exhausted
            };
            return Ok(robot.finish(status));
        }
        if robot.time >= cfg.time_cap_s {
            return Ok(robot.finish(MissionStatus::TimedOut));
        }
        robot.step += 1;
        robot.time += cfg.dt;
        let collided = robot.drive();
        robot.take_scan()?;
        let before = robot.map.clone();
        let update = robot.integrate();
        reg.grow_region(&robot);

        let unseen: Vec<(usize, usize)> = update
            .newly_occupied
            .iter()
            .copied()
            .filter(|&(x, y)| before.get(x, y) == Cell::Unknown)
            .collect();
        let obstructed = collided || robot.route.crosses(&unseen);
        if obstructed || robot.d >= cfg.motion.relocation_distance {
            let cause = if obstructed {
                robot.events.push(LogEvent::Obstruction);
                RegistrationCause::Obstruction
            } else {
                RegistrationCause::Distance
            };
            reg.register(&mut robot, cause)?;
            if let Some(mm) = &reg.motion_map {
                // Correct the pose against the plan's walls, then redo this
                // scan's integration from the corrected pose.
                robot.relocalize(&mm.walls.clone())?;
                robot.map = before;
                if let Some((bx, by)) = robot.bumped {
                    robot.map.add_contact(bx, by);
                }
                robot.integrate();
            }
            fr_replan(&mut robot, &reg)?;
        } else if goal_stale(&robot, reg.motion_map.as_ref(), &wanted_rooms(&robot, plan)) {
            fr_replan(&mut robot, &reg)?;
        }
        robot.record();
    }
}

/// Unit vector from the start towards the missing targets, if any.
fn target_bearing(robot: &Robot) -> (f64, f64) {
    let missing: Vec<Point> = robot
        .world
        .targets
        .iter()
        .zip(&robot.found)
        .filter(|(_, &f)| !f)
        .map(|(&(p, _), _)| p)
        .collect();
    if missing.is_empty() || robot.cfg.scenario == Scenario::UnknownCount {
        return (0.0, 0.0);
    }
    let n = missing.len() as f64;
    let (cx, cy) = (missing.iter().map(|p| p.x).sum::<f64>() / n, missing.iter().map(|p| p.y).sum::<f64>() / n);
    let (dx, dy) = (cx - robot.world.start.x, cy - robot.world.start.y);
    let len = dx.hypot(dy);
    if len == 0.0 {
        (0.0, 0.0)
    } else {
        (dx / len, dy / len)
    }
}

/// Weight of progress along the target bearing against path cost.
const BEARING_WEIGHT: f64 = 0.5;

/// Path cost to a cell, discounted by how far it lies along the bearing.
fn goal_cost<'f>(robot: &Robot, field: &'f [f64], w: usize) -> impl Fn(usize) -> f64 + 'f {
    let (hx, hy) = target_bearing(robot);
    let (ex, ey) = (robot.est.x, robot.est.y);
    move |i: usize| {
        let (x, y) = ((i % w) as f64 + 0.5, (i / w) as f64 + 0.5);
        field[i] - BEARING_WEIGHT * ((x - ex) * hx + (y - ey) * hy)
    }
}

fn baseline_replan(robot: &mut Robot) -> Result<()> {
    let mut grid = CostGrid::from_grid(&robot.map, true);
    grid.inflate(&INFLATION);
    let Some(start) = free_start(&grid, robot.est.cell()) else {
        return robot.set_route(&grid, (0, 0), None);
    };
    let field = distance_field(&grid, start)?;
    let w = grid.width();
    let cost = goal_cost(robot, &field, w);
    let goal = (0..field.len())
        .filter(|&i| field[i].is_finite() && !robot.searched[i] && robot.map.cells()[i] == Cell::Free)
        .min_by(|&a, &b| cost(a).total_cmp(&cost(b)).then(a.cmp(&b)))
        .map(|i| (i % w, i / w));
    robot.set_route(&grid, start, goal)
}

/// Frontier exploration without a floor plan: repeatedly heads for the
/// cheapest unsearched known-free cell, biased towards the target bearing
/// when one is known, until the targets are found or nothing is left.
pub fn run_baseline_explorer(world: &World, cfg: &MissionConfig) -> Result<MissionLog> {
    let mut robot = Robot::new(world, cfg, Mode::Baseline)?;
    robot.take_scan()?;
    robot.integrate();
    baseline_replan(&mut robot)?;
    robot.record();

    loop {
        if cfg.scenario == Scenario::KnownRooms && robot.all_found() {
            return Ok(robot.finish(MissionStatus::Completed));
        }
        if robot.route.goal.is_none() {
            let status = if cfg.scenario == Scenario::UnknownCount || robot.all_found() {
                MissionStatus::Completed
            } else {
                MissionStatus::Exhausted
            };
            return Ok(robot.finish(status));
        }
        if robot.time >= cfg.time_cap_s {
            return Ok(robot.finish(MissionStatus::TimedOut));
        }
        robot.step += 1;
        robot.time += cfg.dt;
        let collided = robot.drive();
        robot.take_scan()?;
        let relocalized = collided || robot.d >= cfg.motion.relocation_distance;
        if relocalized {
            let walls = robot.map.mask_of(|c| c == Cell::Occupied);
            robot.relocalize(&walls)?;
            robot.d = 0.0;
        }
        let update = robot.integrate();
        let obstructed = collided || robot.route.crosses(&update.newly_occupied);
        if obstructed {
            robot.events.push(LogEvent::Obstruction);
        }
        let stale = match robot.route.goal {
            Some(g) => robot.route.done() || robot.searched[g.1 * robot.map.width() + g.0],
            None => true,
        };
        if obstructed || relocalized || stale {
            baseline_replan(&mut robot)?;
        }
        robot.record();
    }
}
