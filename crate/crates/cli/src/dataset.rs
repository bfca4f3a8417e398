//! Synthetic registration datasets: random plans, a known dihedral transform
//! and scale, and LiDAR masks covering a chosen fraction of the dwelling.
//!
//! Layout of a generated directory:
//!
//! ```text
//! manifest.json
//! 0000-050/plan.json  0000-050/lidar.pgm  0000-050/truth.json
//! ```
//!
//! Directory names are `<case>-<completeness percent>`.

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use planreg_core::floorplan::{shared_walls, Framing};
use planreg_core::pgm::{self, PgmFormat};
use planreg_core::raster::fill_polygon;
use planreg_core::registration::{Placement, TransformParams};
use planreg_core::synth::{exploration_order, random_plan, PlanShape};
use planreg_core::{parse_plan, BinaryMask, FloorPlan, GrayImage, Polygon, D4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Border around the plan in generated LiDAR images, pixels.
const MARGIN: f64 = 12.0;
/// Keeps the lowest completeness levels reachable: the living room is
/// always covered in full.
const MAX_LIVING_SHARE: f64 = 0.4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub n_cases: usize,
    pub completeness_levels: Vec<f64>,
    pub rng_seed: u64,
    /// Room counts, cycled over cases.
    pub plan_sizes: Vec<usize>,
    /// Range the per-axis scales `plan cells / LiDAR pixels` are drawn from.
    pub scale_range: (f64, f64),
}

impl SweepConfig {
    pub fn new(n_cases: usize, completeness_levels: Vec<f64>, rng_seed: u64) -> Self {
        SweepConfig {
            n_cases,
            completeness_levels,
            rng_seed,
            plan_sizes: vec![5, 6, 7],
            scale_range: (0.8, 1.6),
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(self.n_cases > 0, "n_cases must be positive");
        ensure!(!self.completeness_levels.is_empty(), "at least one completeness level is needed");
        ensure!(
            self.completeness_levels.iter().all(|&c| c > 0.0 && c <= 1.0),
            "completeness levels must lie in (0, 1]"
        );
        ensure!(
            self.completeness_levels.windows(2).all(|w| w[0] < w[1]),
            "completeness levels must be sorted ascending"
        );
        ensure!(
            !self.plan_sizes.is_empty() && self.plan_sizes.iter().all(|&n| (2..=13).contains(&n)),
            "plan sizes must be room counts between 2 and 13"
        );
        let (lo, hi) = self.scale_range;
        ensure!(lo > 0.0 && lo <= hi, "invalid scale range");
        Ok(())
    }
}

/// Ground truth written next to each case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseTruth {
    pub case: usize,
    pub completeness: f64,
    /// Covered area over full-plan area, measured on the LiDAR grid.
    pub achieved_completeness: f64,
    pub covered_rooms: Vec<String>,
    pub placement: Placement,
}

#[derive(Debug, Clone)]
pub struct GeneratedCase {
    pub plan: FloorPlan,
    pub lidar: BinaryMask,
    pub truth: CaseTruth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub dir: String,
    pub case: usize,
    pub completeness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: SweepConfig,
    pub cases: Vec<ManifestEntry>,
}

pub fn case_dir_name(case: usize, completeness: f64) -> String {
    format!("{case:04}-{:03}", (completeness * 100.0).round() as u32)
}

/// Regions covering about `level` of the plan area: whole rooms in
/// exploration order from the living room, then a strip of the next room
/// along a wall it shares with what is already covered.
fn coverage(plan: &FloorPlan, order: &[usize], level: f64) -> (Vec<Polygon>, Vec<String>) {
    let total = plan.total_area();
    let target = level * total;
    let mut covered = Vec::new();
    let mut polys = Vec::new();
    let mut names = Vec::new();
    let mut area = 0.0;
    for (k, &i) in order.iter().enumerate() {
        let room = &plan.rooms[i];
        let a = room.outline.area();
        if k == 0 || area + a <= target + 1e-9 {
            area += a;
            covered.push(i);
            polys.push(room.outline.clone());
            names.push(room.name.clone());
            continue;
        }
        let needed = target - area;
        if needed > 0.005 * total {
            if let Some(strip) = strip_of(plan, i, &covered, needed) {
                polys.push(strip);
                names.push(room.name.clone());
            }
        }
        break;
    }
    (polys, names)
}

/// Part of rectangular room `i` of area `needed`, flush against a wall it
/// shares with a covered room.
fn strip_of(plan: &FloorPlan, i: usize, covered: &[usize], needed: f64) -> Option<Polygon> {
    let outline = &plan.rooms[i].outline;
    let v = outline.vertices();
    if v.len() != 4 {
        return None;
    }
    let (x0, x1) = (v.iter().map(|p| p.x).fold(f64::INFINITY, f64::min), v.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max));
    let (y0, y1) = (v.iter().map(|p| p.y).fold(f64::INFINITY, f64::min), v.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max));
    let wall = shared_walls(plan)
        .into_iter()
        .filter(|w| (w.a == i && covered.contains(&w.b)) || (w.b == i && covered.contains(&w.a)))
        .max_by(|a, b| a.length().total_cmp(&b.length()))?;
    let eps = 1e-9;
    let rect = if (wall.start.x - wall.end.x).abs() < eps {
        let d = (needed / (y1 - y0)).min(x1 - x0);
        if (wall.start.x - x0).abs() < eps {
            (x0, y0, x0 + d, y1)
        } else {
            (x1 - d, y0, x1, y1)
        }
    } else {
        let d = (needed / (x1 - x0)).min(y1 - y0);
        if (wall.start.y - y0).abs() < eps {
            (x0, y0, x1, y0 + d)
        } else {
            (x0, y1 - d, x1, y1)
        }
    };
    Polygon::rect(rect.0, rect.1, rect.2, rect.3).ok()
}

fn render(polys: &[Polygon], placement: &Placement, w: usize, h: usize) -> Result<BinaryMask> {
    let mut m = BinaryMask::new(w, h);
    for p in polys {
        fill_polygon(&mut m, &placement.map_polygon(p)?, true);
    }
    Ok(m)
}

/// A few tiny blobs away from the structure; the component filter removes them.
fn add_speckles(rng: &mut ChaCha8Rng, mask: &mut BinaryMask) {
    let (w, h) = (mask.width(), mask.height());
    let count = rng.random_range(3..=6);
    let mut placed = 0;
    for _ in 0..200 {
        if placed == count {
            break;
        }
        let x = rng.random_range(2..w - 4);
        let y = rng.random_range(2..h - 4);
        let clear = (x - 2..x + 5).all(|xx| (y - 2..y + 5).all(|yy| !mask.get(xx, yy)));
        if !clear {
            continue;
        }
        let (bw, bh) = (rng.random_range(1..=2), rng.random_range(1..=2));
        for yy in y..y + bh {
            for xx in x..x + bw {
                mask.set(xx, yy, true);
            }
        }
        placed += 1;
    }
}

/// Generates every completeness level of case `case`. All levels share the
/// plan, transform and scale.
pub fn generate_case(cfg: &SweepConfig, case: usize) -> Result<Vec<GeneratedCase>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    rng.set_stream(case as u64);
    let shape = PlanShape {
        rooms: cfg.plan_sizes[case % cfg.plan_sizes.len()],
        max_living_share: MAX_LIVING_SHARE,
        ..PlanShape::default()
    };
    let plan = random_plan(&mut rng, &shape)?;
    let g = D4::ALL[rng.random_range(0..8)];
    let (lo, hi) = cfg.scale_range;
    let s_h = rng.random_range(lo..=hi);
    let s_v = rng.random_range(lo..=hi);
    let framing = Framing::native(&plan);
    let (fw, fh) = (framing.width as f64, framing.height as f64);
    let placement = Placement {
        transform: TransformParams {
            rot: g.rot,
            flip: g.flip,
            s_h,
            s_v,
        },
        plan_origin: framing.origin,
        cells_per_unit: framing.cells_per_unit,
        frame: (fw, fh),
        offset: (MARGIN, MARGIN),
    };
    let (tw, th) = g.output_dims(fw, fh);
    let w = (tw / s_h + 2.0 * MARGIN).ceil() as usize;
    let h = (th / s_v + 2.0 * MARGIN).ceil() as usize;
    let all: Vec<Polygon> = plan.rooms.iter().map(|r| r.outline.clone()).collect();
    let full_area = render(&all, &placement, w, h)?.count_ones() as f64;
    let order = exploration_order(&mut rng, &plan, shape.min_contact);

    let mut out = Vec::with_capacity(cfg.completeness_levels.len());
    for &level in &cfg.completeness_levels {
        let (polys, names) = coverage(&plan, &order, level);
        let mut lidar = render(&polys, &placement, w, h)?;
        let achieved = lidar.count_ones() as f64 / full_area;
        let mut speckle_rng = rng.clone();
        speckle_rng.set_stream(((case as u64) << 8) | (level * 100.0).round() as u64);
        add_speckles(&mut speckle_rng, &mut lidar);
        out.push(GeneratedCase {
            plan: plan.clone(),
            lidar,
            truth: CaseTruth {
                case,
                completeness: level,
                achieved_completeness: achieved,
                covered_rooms: names,
                placement,
            },
        });
    }
    Ok(out)
}

/// Writes the whole sweep. Cases are generated in parallel; files are
/// written afterwards in case order.
pub fn write_dataset(cfg: &SweepConfig, out_dir: &Path) -> Result<Manifest> {
    cfg.validate()?;
    std::fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let generated: Vec<Vec<GeneratedCase>> = (0..cfg.n_cases)
        .into_par_iter()
        .map(|i| generate_case(cfg, i))
        .collect::<Result<_>>()?;
    let mut entries = Vec::new();
    for case in generated.iter().flatten() {
        let name = case_dir_name(case.truth.case, case.truth.completeness);
        let dir = out_dir.join(&name);
        std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        std::fs::write(dir.join("plan.json"), case.plan.to_json())?;
        pgm::write(dir.join("lidar.pgm"), &pgm::mask_to_gray(&case.lidar), PgmFormat::Binary)?;
        std::fs::write(dir.join("truth.json"), serde_json::to_string_pretty(&case.truth)?)?;
        entries.push(ManifestEntry {
            dir: name,
            case: case.truth.case,
            completeness: case.truth.completeness,
        });
    }
    let manifest = Manifest {
        config: cfg.clone(),
        cases: entries,
    };
    std::fs::write(out_dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(manifest)
}

/// One case read back from disk.
#[derive(Debug, Clone)]
pub struct LoadedCase {
    pub dir: PathBuf,
    pub plan: FloorPlan,
    pub image: GrayImage,
    pub truth: CaseTruth,
}

/// Parse errors carry the file name; JSON syntax errors also carry the line.
pub fn read_plan(path: &Path) -> Result<FloorPlan> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_plan(&text).with_context(|| format!("invalid floor plan {}", path.display()))
}

pub fn load_case(dir: &Path) -> Result<LoadedCase> {
    let plan = read_plan(&dir.join("plan.json"))?;
    let image = pgm::read(dir.join("lidar.pgm")).with_context(|| format!("reading {}/lidar.pgm", dir.display()))?;
    let truth_text =
        std::fs::read_to_string(dir.join("truth.json")).with_context(|| format!("reading {}/truth.json", dir.display()))?;
    let truth: CaseTruth =
        serde_json::from_str(&truth_text).with_context(|| format!("parsing {}/truth.json", dir.display()))?;
    Ok(LoadedCase {
        dir: dir.to_path_buf(),
        plan,
        image,
        truth,
    })
}

pub fn load_dataset(dir: &Path) -> Result<Vec<LoadedCase>> {
    let path = dir.join("manifest.json");
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let manifest: Manifest = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if manifest.cases.is_empty() {
        bail!("dataset {} has no cases", dir.display());
    }
    manifest
        .cases
        .par_iter()
        .map(|e| load_case(&dir.join(&e.dir)))
        .collect()
}
