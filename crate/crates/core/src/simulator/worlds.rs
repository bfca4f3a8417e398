//! Ready-made worlds: seeded random multi-room homes and a scripted
//! closed-door scenario, each with the distorted plan copy the robot gets.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::d4::{Flip, Rotation, D4};
use crate::error::{Error, Result};
use crate::floorplan::{shared_walls, FloorPlan, Room, RoomKind};
use crate::geometry::{point_polygon_distance, Extent, Point, Polygon};
use crate::raster::{Cell, OccupancyGrid};
use crate::synth::{map_plan, random_plan, PlanShape};

use super::scan::{integrate_scan, raycast_scan};
use super::world::{DoorSpec, StartPose, Target, World, WorldSpec};
use super::Pose;

/// World cells per plan unit.
pub const WORLD_RESOLUTION: f64 = 3.0;
/// Door width, plan units.
pub const DOOR_WIDTH: f64 = 1.0;
/// Shortest shared wall that gets a door, plan units.
pub const MIN_DOOR_WALL: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedWorld {
    pub spec: WorldSpec,
    /// Plan handed to the robot: the true plan under `plan_transform`,
    /// stretched by `plan_scale`.
    pub robot_plan: FloorPlan,
    pub plan_transform: D4,
    pub plan_scale: (f64, f64),
}

/// One door centred on every shared wall of at least `MIN_DOOR_WALL`.
pub fn doors_on_shared_walls(plan: &FloorPlan) -> Vec<DoorSpec> {
    shared_walls(plan)
        .into_iter()
        .filter(|w| w.length() >= MIN_DOOR_WALL)
        .enumerate()
        .map(|(k, w)| {
            let m = w.midpoint();
            let len = w.length();
            let (ux, uy) = ((w.end.x - w.start.x) / len, (w.end.y - w.start.y) / len);
            let h = DOOR_WIDTH / 2.0;
            DoorSpec {
                id: format!("d{k}"),
                from: plan.rooms[w.a].name.clone(),
                to: plan.rooms[w.b].name.clone(),
                segment: [[m.x - ux * h, m.y - uy * h], [m.x + ux * h, m.y + uy * h]],
                closed: false,
            }
        })
        .collect()
}

/// The plan under a dihedral transform of its bounding box, then stretched
/// per axis.
pub fn distorted_plan(plan: &FloorPlan, g: D4, scale: (f64, f64)) -> Result<FloorPlan> {
    let b = plan.bounds();
    let (w, h) = (b.width(), b.height());
    map_plan(plan, plan.units_per_cell, |p| {
        let q = g.apply_point(Point::new(p.x - b.min_x, p.y - b.min_y), w, h);
        Point::new(q.x * scale.0, q.y * scale.1)
    })
}

/// Room indices ordered by door hops from `from`; unreachable rooms are `None`.
pub fn door_hops(plan: &FloorPlan, doors: &[DoorSpec], from: usize) -> Result<Vec<Option<usize>>> {
    let n = plan.rooms.len();
    let mut adj = vec![Vec::new(); n];
    for d in doors.iter().filter(|d| !d.closed) {
        let (a, b) = (plan.room_index(&d.from)?, plan.room_index(&d.to)?);
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut hops = vec![None; n];
    hops[from] = Some(0);
    let mut queue = VecDeque::from([from]);
    while let Some(i) = queue.pop_front() {
        for &j in &adj[i] {
            if hops[j].is_none() {
                hops[j] = Some(hops[i].expect("queued rooms have hops") + 1);
                queue.push_back(j);
            }
        }
    }
    Ok(hops)
}

/// Interior point of the room at least one unit from its walls.
fn interior_point<R: Rng>(rng: &mut R, outline: &Polygon) -> Result<Point> {
    let b = outline.bounds()?;
    for _ in 0..1000 {
        let p = Point::new(rng.random_range(b.min_x..b.max_x), rng.random_range(b.min_y..b.max_y));
        if outline.contains(p) && point_polygon_distance(p, outline) >= 1.0 {
            return Ok(p);
        }
    }
    Err(Error::World("room too small for a target".into()))
}

/// Living-room position, on a half-unit lattice at least one unit from the
/// walls, whose scan covers the most of the living room, then sees the
/// farthest.
fn best_start(spec: &WorldSpec) -> Result<StartPose> {
    let living = &spec.plan.rooms[spec.plan.living_room_index()].outline;
    let b = living.bounds()?;
    let mut candidates = Vec::new();
    let mut y = b.min_y + 1.0;
    while y <= b.max_y - 1.0 {
        let mut x = b.min_x + 1.0;
        while x <= b.max_x - 1.0 {
            let p = Point::new(x, y);
            if living.contains(p) && point_polygon_distance(p, living) >= 1.0 {
                candidates.push(p);
            }
            x += 0.5;
        }
        y += 0.5;
    }
    let first = *candidates.first().ok_or_else(|| Error::World("living room too small for a start".into()))?;
    let mut probe = spec.clone();
    probe.targets.clear();
    probe.start = StartPose {
        x: first.x,
        y: first.y,
        heading: 0.0,
    };
    let world = World::new(probe)?;
    let living_index = spec.plan.living_room_index();
    let mut best = ((0usize, f64::NEG_INFINITY), first);
    for p in candidates {
        let c = world.to_cells(p);
        let pose = Pose::new(c.x, c.y, 0.0);
        let mut map = OccupancyGrid::new(world.width(), world.height());
        integrate_scan(&mut map, pose, &raycast_scan(&world, pose, 360, 200.0)?);
        let covered = (0..world.height())
            .flat_map(|y| (0..world.width()).map(move |x| (x, y)))
            .filter(|&(x, y)| map.get(x, y) == Cell::Free && world.interior_room_at(x as i64, y as i64) == Some(living_index))
            .count();
        let reach: f64 = raycast_scan(&world, pose, 36, 200.0)?.iter().map(|b| b.range).sum();
        if covered > best.0 .0 || (covered == best.0 .0 && reach > best.0 .1 + 1e-9) {
            best = ((covered, reach), p);
        }
    }
    Ok(StartPose {
        x: best.1.x,
        y: best.1.y,
        heading: 0.0,
    })
}

/// Seeded home with doors on every shared wall, the start at the living
/// room's best vantage point and one target in a room that is the most
/// door hops away.
pub fn random_world(seed: u64, shape: &PlanShape) -> Result<GeneratedWorld> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let plan = random_plan(&mut rng, shape)?;
    let doors = doors_on_shared_walls(&plan);
    let living = plan.living_room_index();
    let hops = door_hops(&plan, &doors, living)?;
    let far = hops.iter().flatten().copied().max().unwrap_or(0);
    let farthest: Vec<usize> = (0..plan.rooms.len()).filter(|&i| hops[i] == Some(far)).collect();
    let room = farthest[rng.random_range(0..farthest.len())];
    let p = interior_point(&mut rng, &plan.rooms[room].outline)?;
    let mut spec = WorldSpec {
        plan: plan.clone(),
        resolution_cells_per_unit: WORLD_RESOLUTION,
        doors,
        targets: vec![Target {
            x: p.x,
            y: p.y,
            room: plan.rooms[room].name.clone(),
        }],
        start: StartPose {
            x: 0.0,
            y: 0.0,
            heading: 0.0,
        },
    };
    spec.start = best_start(&spec)?;
    let g = D4::ALL[rng.random_range(0..8)];
    let scale = (rng.random_range(0.75..1.35), rng.random_range(0.75..1.35));
    Ok(GeneratedWorld {
        robot_plan: distorted_plan(&plan, g, scale)?,
        spec,
        plan_transform: g,
        plan_scale: scale,
    })
}

fn rect_room(name: &str, x0: f64, y0: f64, x1: f64, y1: f64) -> Room {
    Room {
        name: name.into(),
        kind: RoomKind::Other,
        outline: Polygon::rect(x0, y0, x1, y1).expect("fixed rooms are valid"),
    }
}

/// Five rooms in a loop. The shortest route from the start to the target
/// runs through `room_a` and the door `room_a`/`room_b`, which is closed
/// and cannot be seen from the start; the detour goes through `room_d`.
pub fn closed_door_world() -> GeneratedWorld {
    let living = Polygon::new(vec![
        Point::new(0.0, 0.0),
        Point::new(8.0, 0.0),
        Point::new(8.0, 3.0),
        Point::new(4.0, 3.0),
        Point::new(4.0, 12.0),
        Point::new(0.0, 12.0),
    ])
    .expect("fixed outline is valid");
    let plan = FloorPlan::new(
        0.1,
        vec![
            Room {
                name: "living".into(),
                kind: RoomKind::LivingRoom,
                outline: living,
            },
            rect_room("room_a", 8.0, 0.0, 13.0, 5.0),
            rect_room("room_b", 13.0, 0.0, 18.0, 10.0),
            rect_room("room_c", 4.0, 3.0, 8.0, 12.0),
            rect_room("room_d", 8.0, 5.0, 13.0, 12.0),
        ],
    )
    .expect("fixed plan is valid");
    let mut doors = doors_on_shared_walls(&plan);
    for d in &mut doors {
        let pair = [d.from.as_str(), d.to.as_str()];
        d.closed = pair.contains(&"room_a") && pair.contains(&"room_b");
    }
    let spec = WorldSpec {
        plan: plan.clone(),
        resolution_cells_per_unit: WORLD_RESOLUTION,
        doors,
        targets: vec![Target {
            x: 16.0,
            y: 2.0,
            room: "room_b".into(),
        }],
        start: StartPose {
            x: 2.0,
            y: 2.5,
            heading: 0.0,
        },
    };
    let g = D4::new(Rotation::R90, Flip::None);
    let scale = (1.1, 0.9);
    GeneratedWorld {
        robot_plan: distorted_plan(&plan, g, scale).expect("positive scale keeps the plan valid"),
        spec,
        plan_transform: g,
        plan_scale: scale,
    }
}

/// One rectangular room with a target in the far corner.
pub fn single_room_world() -> WorldSpec {
    let plan = FloorPlan::new(
        0.1,
        vec![Room {
            name: "living".into(),
            kind: RoomKind::LivingRoom,
            outline: Polygon::new(vec![
                Point::new(0.0, 0.0),
                Point::new(9.0, 0.0),
                Point::new(9.0, 3.0),
                Point::new(5.0, 3.0),
                Point::new(5.0, 7.0),
                Point::new(0.0, 7.0),
            ])
            .expect("fixed outline is valid"),
        }],
    )
    .expect("fixed plan is valid");
    WorldSpec {
        plan,
        resolution_cells_per_unit: WORLD_RESOLUTION,
        doors: Vec::new(),
        targets: vec![Target {
            x: 8.0,
            y: 1.5,
            room: "living".into(),
        }],
        start: StartPose {
            x: 1.5,
            y: 5.5,
            heading: 0.0,
        },
    }
}
