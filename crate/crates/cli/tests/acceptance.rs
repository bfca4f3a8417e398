//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::VecDeque;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use planreg_cli::dataset::{generate_case, LoadedCase, SweepConfig};
use planreg_cli::evaluate::{to_eval_case, PreprocessConfig};
use planreg_core::floorplan::{render_subset, Framing};
use planreg_core::raster::{apply_d4, fill_polygon, filter_components, mask_iou, Connectivity};
use planreg_core::registration::{evaluate_case, register, CaseOutcome, EvalCase, MetricsReport};
use planreg_core::simulator::worlds::{closed_door_world, random_world};
use planreg_core::simulator::{run_baseline_explorer, run_fr_slam, LogEvent, MissionConfig, MissionStatus, MotionConfig, Scenario, World};
use planreg_core::synth::{random_plan, PlanShape};
use planreg_core::{pgm, BinaryMask, Flip, Point, Polygon, D4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn eval_cases(cfg: &SweepConfig) -> Vec<EvalCase> {
    (0..cfg.n_cases)
        .flat_map(|i| generate_case(cfg, i).expect("case generates"))
        .map(|c| {
            let loaded = LoadedCase {
                dir: Default::default(),
                image: pgm::mask_to_gray(&c.lidar),
                plan: c.plan,
                truth: c.truth,
            };
            to_eval_case(&loaded, PreprocessConfig::default()).expect("case preprocesses")
        })
        .collect()
}

fn outcomes(cases: &[EvalCase]) -> Vec<CaseOutcome> {
    cases.iter().map(|c| evaluate_case(c).expect("case evaluates")).collect()
}

fn oracle_registration() -> Verdict {
    let start = Instant::now();
    let cfg = SweepConfig::new(50, vec![1.0], 101);
    let out = outcomes(&eval_cases(&cfg));
    let elapsed = start.elapsed().as_secs_f64();
    let m = MetricsReport::from_outcomes(&out).expect("cases");
    let worst_scale = out.iter().map(|o| o.scale_error).fold(0.0, f64::max);
    verdict(
        m.rotation_accuracy >= 0.95 && m.fold_accuracy >= 0.95 && worst_scale <= 0.05 && elapsed < 60.0,
        format!(
            "rotation {:.1}%, fold {:.1}%, worst scale error {:.2}%, suite {elapsed:.1} s",
            100.0 * m.rotation_accuracy,
            100.0 * m.fold_accuracy,
            100.0 * worst_scale
        ),
    )
}

fn partial_coverage() -> Verdict {
    let levels = vec![0.5, 0.7, 0.9, 1.0];
    let cfg = SweepConfig::new(25, levels.clone(), 202);
    let out = outcomes(&eval_cases(&cfg));
    let bucket = |l: f64| {
        let sel: Vec<CaseOutcome> = out.iter().filter(|o| o.completeness == l).cloned().collect();
        MetricsReport::from_outcomes(&sel).expect("bucket has cases")
    };
    let ms: Vec<MetricsReport> = levels.iter().map(|&l| bucket(l)).collect();
    let fused: Vec<f64> = ms.iter().map(|m| m.mean_fused_iou).collect();
    let drops: Vec<f64> = fused.windows(2).map(|w| w[0] - w[1]).filter(|&d| d > 0.0).collect();
    let trend_ok = drops.is_empty() || (drops.len() == 1 && drops[0] <= 0.01);
    let top = ms[3].iou_a;
    verdict(
        trend_ok && top >= 0.94,
        format!(
            "mean fused IoU by level {:?}, IoU_a at full coverage {:.1}%",
            fused.iter().map(|f| format!("{:.3}", f)).collect::<Vec<_>>(),
            100.0 * top
        ),
    )
}

fn latency() -> Verdict {
    let cfg = SweepConfig {
        plan_sizes: vec![7],
        ..SweepConfig::new(20, vec![1.0], 303)
    };
    let cases = eval_cases(&cfg);
    let mut total = 0.0;
    let mut variants = 0;
    for c in &cases {
        // Registration always works on the square grid, so resizing up front
        // changes nothing but makes the input size explicit.
        let lidar = planreg_core::raster::resize_nn(&c.lidar, 200, 200);
        let t = Instant::now();
        let r = register(&lidar, &c.plan).expect("registers");
        total += t.elapsed().as_secs_f64();
        variants = variants.max(r.candidates.len() / 8);
    }
    let mean = total / cases.len() as f64;
    verdict(
        mean <= 1.0 && variants <= 64,
        format!("mean register time {:.4} s over {} cases, up to {variants} variants", mean, cases.len()),
    )
}

/// Star-shaped polygons are simple by construction.
fn random_star(rng: &mut ChaCha8Rng) -> Polygon {
    let n = rng.random_range(5..=24);
    let step = std::f64::consts::TAU / n as f64;
    let pts = (0..n)
        .map(|k| {
            let a = (k as f64 + rng.random_range(0.0..0.8)) * step;
            let r = rng.random_range(55.0..105.0);
            Point::new(125.0 + r * a.cos(), 125.0 + r * a.sin())
        })
        .collect();
    Polygon::new(pts).expect("star polygon is valid")
}

/// Component sizes by breadth-first search, 4- or 8-connected.
fn oracle_filter(mask: &BinaryMask, alpha: usize, eight: bool) -> BinaryMask {
    let (w, h) = (mask.width(), mask.height());
    let mut label = vec![usize::MAX; w * h];
    let mut sizes = Vec::new();
    for s in 0..w * h {
        if !mask.cells()[s] || label[s] != usize::MAX {
            continue;
        }
        let id = sizes.len();
        let mut n = 0;
        let mut q = VecDeque::from([s]);
        label[s] = id;
        while let Some(i) = q.pop_front() {
            n += 1;
            let (x, y) = ((i % w) as i64, (i / w) as i64);
            for dy in -1..=1i64 {
                for dx in -1..=1i64 {
                    if (dx, dy) == (0, 0) || (!eight && dx != 0 && dy != 0) {
                        continue;
                    }
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        continue;
                    }
                    let j = ny as usize * w + nx as usize;
                    if mask.cells()[j] && label[j] == usize::MAX {
                        label[j] = id;
                        q.push_back(j);
                    }
                }
            }
        }
        sizes.push(n);
    }
    BinaryMask::from_fn(w, h, |x, y| {
        let l = label[y * w + x];
        l != usize::MAX && sizes[l] >= alpha
    })
}

fn geometry_raster() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut worst_area: f64 = 0.0;
    for _ in 0..100 {
        let poly = random_star(&mut rng);
        let mut m = BinaryMask::new(250, 250);
        fill_polygon(&mut m, &poly, true);
        let err = (m.count_ones() as f64 - poly.area()).abs() / poly.area();
        worst_area = worst_area.max(err);
    }
    let mut iou_exact = true;
    let mut filter_exact = true;
    for _ in 0..50 {
        let density = rng.random_range(0.1..0.6);
        let a = BinaryMask::from_fn(200, 200, |_, _| rng.random_bool(density));
        let b = BinaryMask::from_fn(200, 200, |_, _| rng.random_bool(density));
        let (mut inter, mut union) = (0usize, 0usize);
        for y in 0..200 {
            for x in 0..200 {
                inter += (a.get(x, y) && b.get(x, y)) as usize;
                union += (a.get(x, y) || b.get(x, y)) as usize;
            }
        }
        let s = mask_iou(&a, &b).expect("same shape");
        iou_exact &= s.intersection == inter && s.union == union && s.iou == inter as f64 / union as f64;
        let alpha = rng.random_range(1..40);
        filter_exact &= filter_components(&a, alpha, Connectivity::Eight) == oracle_filter(&a, alpha, true);
        filter_exact &= filter_components(&a, alpha, Connectivity::Four) == oracle_filter(&a, alpha, false);
    }
    verdict(
        worst_area <= 0.02 && iou_exact && filter_exact,
        format!(
            "worst area error {:.3}% over 100 polygons, mask IoU exact: {iou_exact}, component filter exact: {filter_exact}",
            100.0 * worst_area
        ),
    )
}

/// Integer matrix of a transform acting on column vectors.
fn matrix(g: D4) -> [[i32; 2]; 2] {
    let mut m = if g.flip == Flip::Horizontal { [[-1, 0], [0, 1]] } else { [[1, 0], [0, 1]] };
    for _ in 0..g.rot.quarter_turns() {
        m = [[-m[1][0], -m[1][1]], [m[0][0], m[0][1]]];
    }
    m
}

fn mul(a: [[i32; 2]; 2], b: [[i32; 2]; 2]) -> [[i32; 2]; 2] {
    let mut c = [[0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

fn d4_group() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let fixture = BinaryMask::from_fn(7, 5, |x, y| (x < 4 && y < 2) || (x == 0 && y < 4) || (x == 6 && y == 4));
    let images: Vec<BinaryMask> = D4::ALL.iter().map(|&g| apply_d4(&fixture, g)).collect();
    let distinct = (0..8).all(|i| (i + 1..8).all(|j| images[i] != images[j]));
    let mut table_ok = true;
    for &a in &D4::ALL {
        for &b in &D4::ALL {
            let c = a.compose(b);
            table_ok &= matrix(c) == mul(matrix(a), matrix(b));
            table_ok &= apply_d4(&apply_d4(&fixture, b), a) == apply_d4(&fixture, c);
        }
    }
    let mut equivariant = 0;
    for _ in 0..20 {
        let plan = random_plan(&mut rng, &PlanShape::default()).expect("plan");
        let all: Vec<usize> = (0..plan.rooms.len()).collect();
        let image = render_subset(&plan, &all, &Framing::native(&plan));
        let g = D4::ALL[rng.random_range(0..8)];
        let base = register(&image, &plan).expect("registers").element();
        let moved = register(&apply_d4(&image, g), &plan).expect("registers").element();
        equivariant += (moved == g.compose(base)) as usize;
    }
    verdict(
        distinct && table_ok && equivariant == 20,
        format!("8 distinct images: {distinct}, composition table: {table_ok}, argmax equivariant on {equivariant}/20 plans"),
    )
}

fn relocation_loop() -> Verdict {
    let g = closed_door_world();
    let world = World::new(g.spec.clone()).expect("world");
    let log = run_fr_slam(&world, &g.robot_plan, &MissionConfig::default()).expect("mission");
    let obstructions = log.summary.obstruction_registrations;
    let closed_ok = obstructions == 1 && log.summary.status == MissionStatus::Completed;

    let mut worst: f64 = 0.0;
    let mut shortest = f64::INFINITY;
    let mut drift_ok = true;
    for seed in 0..3 {
        let gw = random_world(seed, &PlanShape::default()).expect("world");
        let world = World::new(gw.spec.clone()).expect("world");
        let cfg = MissionConfig {
            motion: MotionConfig {
                noise_sigma_xy: 0.05,
                relocation_distance: 50.0,
                rng_seed: seed,
                ..MotionConfig::default()
            },
            scenario: Scenario::UnknownCount,
            ..MissionConfig::default()
        };
        let log = run_fr_slam(&world, &gw.robot_plan, &cfg).expect("mission");
        let errs: Vec<f64> = log
            .trajectory
            .iter()
            .filter(|r| r.events.iter().any(|e| matches!(e, LogEvent::Localized { .. })))
            .map(|r| r.true_pose.distance(&r.est_pose))
            .collect();
        worst = errs.iter().copied().fold(worst, f64::max);
        shortest = shortest.min(log.summary.distance_travelled);
        drift_ok &= log.summary.distance_registrations > 0 && log.summary.distance_travelled >= 500.0 && !errs.is_empty();
    }
    verdict(
        closed_ok && drift_ok && worst <= 2.0,
        format!(
            "closed door: {obstructions} obstruction registration(s); drift runs: shortest trajectory {shortest:.0} cells, worst post-localize error {worst:.2} cells"
        ),
    )
}

fn mission_times() -> Verdict {
    let (mut fr_total, mut base_total) = (0.0, 0.0);
    let mut wins = 0;
    let mut rows = Vec::new();
    for seed in 0..5 {
        let gw = random_world(seed, &PlanShape::default()).expect("world");
        let rooms = gw.spec.plan.rooms.len();
        let world = World::new(gw.spec.clone()).expect("world");
        let cfg = MissionConfig {
            motion: MotionConfig {
                rng_seed: seed,
                ..MotionConfig::default()
            },
            ..MissionConfig::default()
        };
        let fr = run_fr_slam(&world, &gw.robot_plan, &cfg).expect("mission").summary;
        let base = run_baseline_explorer(&world, &cfg).expect("mission").summary;
        let done = fr.status == MissionStatus::Completed && base.status == MissionStatus::Completed;
        wins += (done && rooms >= 5 && fr.total_time_s < base.total_time_s) as usize;
        fr_total += fr.total_time_s;
        base_total += base.total_time_s;
        rows.push(format!("{:.1}/{:.1}", fr.total_time_s, base.total_time_s));
    }
    let saving = 1.0 - fr_total / base_total;
    verdict(
        wins == 5 && saving >= 0.05,
        format!("FR-SLAM/baseline seconds {rows:?}, wins {wins}/5, aggregate saving {:.1}%", 100.0 * saving),
    )
}

fn planreg(args: &[&str]) -> std::process::Output {
    let out = Command::new(env!("CARGO_BIN_EXE_planreg")).args(args).output().expect("binary runs");
    assert!(
        out.status.success(),
        "planreg {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

/// Drops measured wall times from a JSON document.
fn strip_wall_times(v: &mut Value) {
    match v {
        Value::Object(map) => {
            for key in ["time_s", "mean_time_s", "register_wall_time_s"] {
                map.remove(key);
            }
            map.values_mut().for_each(strip_wall_times);
        }
        Value::Array(items) => items.iter_mut().for_each(strip_wall_times),
        _ => {}
    }
}

fn json_file(path: &Path) -> Value {
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(path).expect("readable")).expect("JSON");
    strip_wall_times(&mut v);
    v
}

/// Every file below `dir` with its bytes, in path order.
fn tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).expect("readable dir") {
            let p = e.expect("entry").path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).expect("below dir").to_string_lossy().into_owned();
                out.push((rel, std::fs::read(&p).expect("readable")));
            }
        }
    }
    out.sort();
    out
}

fn determinism() -> Verdict {
    let tmp = tempfile::tempdir().expect("temp dir");
    let run = |k: usize| {
        let dir = tmp.path().join(format!("run{k}"));
        let s = |p: &str| dir.join(p).to_string_lossy().into_owned();
        planreg(&["gen", "dataset", "--out", &s("data"), "--cases", "3", "--levels", "0.7,1.0", "--seed", "8"]);
        planreg(&["gen", "world", "--out", &s("world"), "--kind", "closed-door"]);
        planreg(&["gen", "world", "--out", &s("random"), "--seed", "3", "--rooms", "5"]);
        planreg(&[
            "register",
            "--plan",
            &s("data/0001-070/plan.json"),
            "--lidar",
            &s("data/0001-070/lidar.pgm"),
            "--out",
            &s("reg.json"),
            "--mask",
            &s("reg.pgm"),
        ]);
        planreg(&["evaluate", "--dataset", &s("data"), "--out", &s("report.json")]);
        for mode in ["fr-slam", "baseline"] {
            planreg(&[
                "simulate",
                "--world",
                &s("world/world.json"),
                "--plan",
                &s("world/plan.json"),
                "--mode",
                mode,
                "--seed",
                "5",
                "--out",
                &s(&format!("{mode}.jsonl")),
                "--summary",
                &s(&format!("{mode}.json")),
            ]);
        }
        dir
    };
    let (a, b) = (run(0), run(1));
    let mut same = Vec::new();
    for sub in ["data", "world", "random"] {
        same.push((sub.to_string(), tree(&a.join(sub)) == tree(&b.join(sub))));
    }
    for f in ["reg.pgm", "fr-slam.jsonl", "baseline.jsonl"] {
        same.push((f.to_string(), std::fs::read(a.join(f)).ok() == std::fs::read(b.join(f)).ok()));
    }
    for f in ["reg.json", "report.json", "fr-slam.json", "baseline.json"] {
        same.push((f.to_string(), json_file(&a.join(f)) == json_file(&b.join(f))));
    }
    let differing: Vec<&str> = same.iter().filter(|(_, s)| !s).map(|(n, _)| n.as_str()).collect();
    verdict(
        differing.is_empty(),
        format!("{} outputs compared across two runs, differing: {differing:?}", same.len()),
    )
}

type Criterion = (&'static str, fn() -> Verdict);

fn main() {
    let criteria: [Criterion; 8] = [
        ("oracle registration", oracle_registration),
        ("partial-coverage degradation", partial_coverage),
        ("registration latency", latency),
        ("geometry and raster equivalence", geometry_raster),
        ("dihedral group correctness", d4_group),
        ("obstruction and relocation loop", relocation_loop),
        ("mission time against frontier baseline", mission_times),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let v = check();
        failed += (!v.pass) as usize;
        println!("{} criterion {}: {name}: {}", if v.pass { "PASS" } else { "FAIL" }, i + 1, v.detail);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
