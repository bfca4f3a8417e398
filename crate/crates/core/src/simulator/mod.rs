//! Deterministic grid simulator: ray-cast scanning, noisy unicycle motion,
//! A* planning, structure-matching localization, and two mission drivers
//! (plan-guided search with re-registration, and frontier exploration).
//!
//! All positions are in world cells; cell `(x, y)` covers `[x, x+1) x [y, y+1)`.

use serde::{Deserialize, Serialize};

pub mod localize;
pub mod mission;
pub mod motion;
pub mod motion_map;
pub mod planning;
pub mod scan;
pub mod world;
pub mod worlds;

pub use localize::{local_structure, localize, refine_subcell, wall_weights};
pub use mission::{run_baseline_explorer, run_fr_slam, LogEvent, LogRecord, MissionConfig, MissionLog, MissionStatus, MissionSummary, Mode, RegistrationCause, Scenario};
pub use motion::{step_motion, MotionConfig};
pub use planning::{distance_field, path_cost, plan_path, CostGrid};
pub use scan::{integrate_scan, line_of_sight, raycast_scan, Beam, EvidenceMap, ScanUpdate};
pub use world::{DoorSpec, StartPose, Target, Terrain, World, WorldSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl Pose {
    pub const fn new(x: f64, y: f64, heading: f64) -> Pose {
        Pose { x, y, heading }
    }

    pub fn cell(&self) -> (i64, i64) {
        (self.x.floor() as i64, self.y.floor() as i64)
    }

    pub fn distance(&self, other: &Pose) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Wraps an angle into `[-pi, pi)`.
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::PI;
    (a + PI).rem_euclid(2.0 * PI) - PI
}
