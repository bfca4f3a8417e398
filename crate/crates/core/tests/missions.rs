//! Whole missions on fixed and seeded worlds, audited through their logs.

use std::collections::HashSet;

use planreg_core::simulator::worlds::{closed_door_world, random_world, single_room_world};
use planreg_core::simulator::{
    run_baseline_explorer, run_fr_slam, LogEvent, MissionConfig, MissionLog, MissionStatus, MotionConfig, Scenario, World,
    WorldSpec,
};
use planreg_core::synth::PlanShape;

fn config(seed: u64) -> MissionConfig {
    MissionConfig {
        motion: MotionConfig {
            rng_seed: seed,
            ..MotionConfig::default()
        },
        ..MissionConfig::default()
    }
}

fn door_pairs(spec: &WorldSpec) -> HashSet<(String, String)> {
    spec.doors
        .iter()
        .flat_map(|d| [(d.from.clone(), d.to.clone()), (d.to.clone(), d.from.clone())])
        .collect()
}

/// Every move from one room interior to another goes through a door.
fn assert_rooms_change_through_doors(spec: &WorldSpec, log: &MissionLog) {
    let pairs = door_pairs(spec);
    let rooms: Vec<&String> = log.trajectory.iter().filter_map(|r| r.room.as_ref()).collect();
    for w in rooms.windows(2) {
        if w[0] != w[1] {
            assert!(pairs.contains(&(w[0].clone(), w[1].clone())), "{} -> {}", w[0], w[1]);
        }
    }
}

/// `d` restarts at every registration, and between replans the remaining
/// path shrinks by exactly the distance driven. The last record closes the
/// mission and drops the route.
fn assert_log_bookkeeping(log: &MissionLog) {
    let running = &log.trajectory[..log.trajectory.len() - 1];
    for pair in running.windows(2) {
        let (prev, cur) = (&pair[0], &pair[1]);
        let registered = cur.events.iter().any(|e| matches!(e, LogEvent::Registration { .. }));
        if registered {
            assert_eq!(cur.d, 0.0, "step {}", cur.step);
        }
        let replanned = cur.events.iter().any(|e| {
            matches!(
                e,
                LogEvent::Replan { .. } | LogEvent::Registration { .. } | LogEvent::Localized { .. } | LogEvent::Collision
            )
        });
        if !replanned && prev.s > 0.0 {
            assert!((prev.s - cur.travel - cur.s).abs() < 1e-6, "step {}: {} - {} != {}", cur.step, prev.s, cur.travel, cur.s);
        }
    }
}

#[test]
fn closed_door_detour() {
    let g = closed_door_world();
    let world = World::new(g.spec.clone()).unwrap();
    let log = run_fr_slam(&world, &g.robot_plan, &MissionConfig::default()).unwrap();
    let s = &log.summary;
    assert_eq!(s.status, MissionStatus::Completed);
    assert_eq!(s.obstruction_registrations, 1);
    assert_eq!(s.registrations, 1 + s.obstruction_registrations + s.distance_registrations);
    let d = s.rooms_visited.iter().position(|r| r == "room_d").expect("detour through room_d");
    let b = s.rooms_visited.iter().position(|r| r == "room_b").unwrap();
    assert!(d < b);
    assert_rooms_change_through_doors(&g.spec, &log);
    assert_log_bookkeeping(&log);
}

#[test]
fn coverage_visits_every_room() {
    let g = random_world(1, &PlanShape::default()).unwrap();
    let world = World::new(g.spec.clone()).unwrap();
    let cfg = MissionConfig {
        scenario: Scenario::UnknownCount,
        ..config(1)
    };
    let all: HashSet<&String> = g.spec.plan.rooms.iter().map(|r| &r.name).collect();
    for log in [
        run_fr_slam(&world, &g.robot_plan, &cfg).unwrap(),
        run_baseline_explorer(&world, &cfg).unwrap(),
    ] {
        assert_eq!(log.summary.status, MissionStatus::Completed);
        assert_eq!(log.summary.rooms_visited.iter().collect::<HashSet<_>>(), all);
        assert_eq!(log.summary.rooms_visited[0], "living");
        assert_rooms_change_through_doors(&g.spec, &log);
        assert_log_bookkeeping(&log);
    }
}

#[test]
fn unbounded_relocation_distance_registers_once() {
    let spec = single_room_world();
    let world = World::new(spec.clone()).unwrap();
    let mut cfg = config(2);
    cfg.motion.relocation_distance = f64::MAX;
    let log = run_fr_slam(&world, &spec.plan, &cfg).unwrap();
    assert_eq!(log.summary.status, MissionStatus::Completed);
    assert_eq!(log.summary.registrations, 1);
}

#[test]
fn single_room_baseline_stays_in_one_room() {
    let spec = single_room_world();
    let world = World::new(spec).unwrap();
    let log = run_baseline_explorer(&world, &config(3)).unwrap();
    assert_eq!(log.summary.status, MissionStatus::Completed);
    assert_eq!(log.summary.rooms_visited, vec!["living".to_string()]);
}

#[test]
fn missions_repeat_exactly() {
    let g = random_world(2, &PlanShape::default()).unwrap();
    let world = World::new(g.spec.clone()).unwrap();
    let run = || {
        let mut a = run_fr_slam(&world, &g.robot_plan, &config(7)).unwrap();
        let mut b = run_baseline_explorer(&world, &config(7)).unwrap();
        a.summary.register_wall_time_s = 0.0;
        b.summary.register_wall_time_s = 0.0;
        (a, b)
    };
    let (first, second) = (run(), run());
    assert_eq!(first, second);
    assert_eq!(first.0.to_json_lines(), second.0.to_json_lines());
}

#[test]
fn plan_guidance_beats_frontier_search() {
    let g = random_world(3, &PlanShape::default()).unwrap();
    let world = World::new(g.spec.clone()).unwrap();
    let fr = run_fr_slam(&world, &g.robot_plan, &config(3)).unwrap();
    let base = run_baseline_explorer(&world, &config(3)).unwrap();
    assert_eq!(fr.summary.targets_found, 1);
    assert_eq!(base.summary.targets_found, 1);
    assert!(fr.summary.total_time_s < base.summary.total_time_s);
    assert!(fr.summary.distance_travelled < base.summary.distance_travelled);
}

