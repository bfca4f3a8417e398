//! World files, mission runs and their logs.

use std::path::Path;

use anyhow::{Context, Result};
use planreg_core::simulator::worlds::{closed_door_world, random_world, single_room_world, GeneratedWorld};
use planreg_core::simulator::{run_baseline_explorer, run_fr_slam, MissionConfig, MissionLog, Mode, Scenario, World, WorldSpec};
use planreg_core::synth::PlanShape;
use planreg_core::{FloorPlan, D4};
use serde::{Deserialize, Serialize};

use crate::dataset::read_plan;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WorldKind {
    Random,
    ClosedDoor,
    SingleRoom,
}

/// How the robot's plan was derived from the true one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanDistortion {
    pub transform: D4,
    pub scale: (f64, f64),
}

pub fn make_world(kind: WorldKind, seed: u64, rooms: usize) -> Result<GeneratedWorld> {
    Ok(match kind {
        WorldKind::Random => random_world(seed, &PlanShape { rooms, ..PlanShape::default() })?,
        WorldKind::ClosedDoor => closed_door_world(),
        WorldKind::SingleRoom => {
            let spec = single_room_world();
            GeneratedWorld {
                robot_plan: spec.plan.clone(),
                spec,
                plan_transform: Default::default(),
                plan_scale: (1.0, 1.0),
            }
        }
    })
}

/// Writes `world.json`, the robot's `plan.json` and `distortion.json`.
pub fn write_world(g: &GeneratedWorld, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    std::fs::write(out_dir.join("world.json"), g.spec.to_json())?;
    std::fs::write(out_dir.join("plan.json"), g.robot_plan.to_json())?;
    let distortion = PlanDistortion {
        transform: g.plan_transform,
        scale: g.plan_scale,
    };
    std::fs::write(out_dir.join("distortion.json"), serde_json::to_string_pretty(&distortion)?)?;
    Ok(())
}

pub fn read_world(path: &Path) -> Result<WorldSpec> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    WorldSpec::parse(&text).with_context(|| format!("invalid world {}", path.display()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulateOptions {
    pub mode: Mode,
    pub scenario: Scenario,
    pub seed: u64,
    /// Mission time cap, seconds.
    pub timeout_s: f64,
    pub relocation_distance: Option<f64>,
    pub noise_sigma: Option<f64>,
}

impl SimulateOptions {
    pub fn mission_config(&self) -> MissionConfig {
        let base = MissionConfig::default();
        let mut motion = base.motion;
        motion.rng_seed = self.seed;
        if let Some(d) = self.relocation_distance {
            motion.relocation_distance = d;
        }
        if let Some(s) = self.noise_sigma {
            motion.noise_sigma_xy = s;
        }
        MissionConfig {
            motion,
            time_cap_s: self.timeout_s,
            scenario: self.scenario,
            ..base
        }
    }
}

/// Runs one mission. FR-SLAM uses `plan`, or the world's own plan when
/// none is given; the baseline ignores it.
pub fn simulate(spec: &WorldSpec, plan: Option<&FloorPlan>, opts: &SimulateOptions) -> Result<MissionLog> {
    let cfg = opts.mission_config();
    cfg.validate()?;
    let world = World::new(spec.clone())?;
    let log = match opts.mode {
        Mode::FrSlam => run_fr_slam(&world, plan.unwrap_or(&spec.plan), &cfg)?,
        Mode::Baseline => run_baseline_explorer(&world, &cfg)?,
    };
    Ok(log)
}

pub fn run_simulate(
    world_path: &Path,
    plan_path: Option<&Path>,
    opts: &SimulateOptions,
    log_path: &Path,
    summary_path: Option<&Path>,
) -> Result<MissionLog> {
    let spec = read_world(world_path)?;
    let plan = plan_path.map(read_plan).transpose()?;
    let log = simulate(&spec, plan.as_ref(), opts)?;
    std::fs::write(log_path, log.to_json_lines()).with_context(|| format!("writing {}", log_path.display()))?;
    if let Some(path) = summary_path {
        std::fs::write(path, serde_json::to_string_pretty(&log.summary)?).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(log)
}
