use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand, ValueEnum};
use planreg_cli::dataset::{load_dataset, write_dataset, SweepConfig};
use planreg_cli::evaluate::{evaluate_cases, render_table, PreprocessConfig};
use planreg_cli::register::run_register;
use planreg_cli::simulate::{make_world, run_simulate, write_world, SimulateOptions, WorldKind};
use planreg_core::registration::ComponentFilterConfig;
use planreg_core::simulator::{MissionStatus, Mode, Scenario};

/// Exit code of a mission that hit its time cap.
const EXIT_TIMEOUT: u8 = 3;

#[derive(Parser)]
#[command(name = "planreg", version, about = "Floor-plan registration against partial LiDAR maps, and a plan-guided search simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a registration dataset or a simulator world.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Register a floor plan against a LiDAR image.
    Register {
        #[arg(long)]
        plan: PathBuf,
        /// PGM image, occupied pixels dark.
        #[arg(long)]
        lidar: PathBuf,
        /// Result JSON.
        #[arg(long)]
        out: PathBuf,
        /// PGM of the placed plan on the LiDAR image grid.
        #[arg(long)]
        mask: Option<PathBuf>,
        #[command(flatten)]
        pre: PreprocessArgs,
    },
    /// Register every case of a generated dataset and report accuracy.
    Evaluate {
        #[arg(long)]
        dataset: PathBuf,
        /// Report JSON.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        pre: PreprocessArgs,
    },
    /// Run a search mission.
    Simulate {
        #[arg(long)]
        world: PathBuf,
        /// Floor plan given to the robot; defaults to the world's plan.
        #[arg(long)]
        plan: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = ModeArg::FrSlam)]
        mode: ModeArg,
        #[arg(long, value_enum, default_value_t = ScenarioArg::KnownRooms)]
        scenario: ScenarioArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Mission time cap, simulated seconds.
        #[arg(long, default_value_t = 600.0)]
        timeout_s: f64,
        /// Travel, in cells, that forces re-registration and relocalization.
        #[arg(long)]
        relocation_distance: Option<f64>,
        /// Per-step position noise, cells.
        #[arg(long)]
        noise_sigma: Option<f64>,
        /// Log, one JSON record per step.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        summary: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum GenCommand {
    /// Random plans with known transforms, at several completeness levels.
    Dataset {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 50)]
        cases: usize,
        #[arg(long, value_delimiter = ',', default_values_t = [0.5, 0.7, 0.9, 1.0])]
        levels: Vec<f64>,
        /// Room counts, cycled over cases.
        #[arg(long, value_delimiter = ',', default_values_t = [5, 6, 7])]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// A world file plus the distorted plan handed to the robot.
    World {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = WorldArg::Random)]
        kind: WorldArg,
        #[arg(long, default_value_t = 6)]
        rooms: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct PreprocessArgs {
    /// Binarization threshold on the inverted image.
    #[arg(long, default_value_t = 128)]
    theta: u8,
    /// Smallest component kept, cells.
    #[arg(long, default_value_t = 50)]
    alpha: usize,
    /// Contour simplification tolerance, cells.
    #[arg(long, default_value_t = 2.0)]
    tolerance: f64,
}

impl PreprocessArgs {
    fn config(&self) -> PreprocessConfig {
        PreprocessConfig {
            filter: ComponentFilterConfig {
                theta: self.theta,
                alpha: self.alpha,
            },
            tolerance: self.tolerance,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    FrSlam,
    Baseline,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScenarioArg {
    KnownRooms,
    UnknownCount,
}

#[derive(Clone, Copy, ValueEnum)]
enum WorldArg {
    Random,
    ClosedDoor,
    SingleRoom,
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Gen(GenCommand::Dataset {
            out,
            cases,
            levels,
            sizes,
            seed,
        }) => {
            let cfg = SweepConfig {
                plan_sizes: sizes,
                ..SweepConfig::new(cases, levels, seed)
            };
            let manifest = write_dataset(&cfg, &out)?;
            println!("wrote {} cases to {}", manifest.cases.len(), out.display());
        }
        Command::Gen(GenCommand::World { out, kind, rooms, seed }) => {
            let kind = match kind {
                WorldArg::Random => WorldKind::Random,
                WorldArg::ClosedDoor => WorldKind::ClosedDoor,
                WorldArg::SingleRoom => WorldKind::SingleRoom,
            };
            write_world(&make_world(kind, seed, rooms)?, &out)?;
            println!("wrote world to {}", out.display());
        }
        Command::Register {
            plan,
            lidar,
            out,
            mask,
            pre,
        } => {
            let report = run_register(&plan, &lidar, &out, mask.as_deref(), pre.config())?;
            let r = &report.result;
            println!(
                "variant {:?} rot {:?} flip {:?} s_h {:.4} s_v {:.4} iou {:.4} time {:.3}s",
                r.variant, r.rot, r.flip, r.s_h, r.s_v, r.iou, report.time_s
            );
        }
        Command::Evaluate { dataset, out, pre } => {
            let cases = load_dataset(&dataset)?;
            let report = evaluate_cases(&cases, pre.config())?;
            std::fs::write(&out, serde_json::to_string_pretty(&report)?)?;
            print!("{}", render_table(&report));
        }
        Command::Simulate {
            world,
            plan,
            mode,
            scenario,
            seed,
            timeout_s,
            relocation_distance,
            noise_sigma,
            out,
            summary,
        } => {
            let opts = SimulateOptions {
                mode: match mode {
                    ModeArg::FrSlam => Mode::FrSlam,
                    ModeArg::Baseline => Mode::Baseline,
                },
                scenario: match scenario {
                    ScenarioArg::KnownRooms => Scenario::KnownRooms,
                    ScenarioArg::UnknownCount => Scenario::UnknownCount,
                },
                seed,
                timeout_s,
                relocation_distance,
                noise_sigma,
            };
            let log = run_simulate(&world, plan.as_deref(), &opts, &out, summary.as_deref())?;
            println!("{}", serde_json::to_string_pretty(&log.summary)?);
            if log.summary.status == MissionStatus::TimedOut {
                eprintln!("mission timed out after {:.1} s", log.summary.total_time_s);
                return Ok(ExitCode::from(EXIT_TIMEOUT));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
