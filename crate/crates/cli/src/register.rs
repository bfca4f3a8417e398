//! Registers one floor plan against one LiDAR image and draws the placed
//! plan back onto the image grid.

use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use planreg_core::pgm::{self, PgmFormat};
use planreg_core::raster::fill_polygon;
use planreg_core::registration::{preprocess_lidar_region, register, Placement, RegistrationResult};
use planreg_core::{BinaryMask, FloorPlan, GrayImage};
use serde::{Deserialize, Serialize};

use crate::dataset::read_plan;
use crate::evaluate::PreprocessConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegisterReport {
    pub result: RegistrationResult,
    /// Top-left corner of the preprocessed region in the input image.
    pub crop_origin: (usize, usize),
    /// Plan units to input-image pixels.
    pub image_placement: Placement,
    pub preprocess: PreprocessConfig,
    /// Wall time of preprocessing plus registration.
    pub time_s: f64,
}

/// Stored images mark occupied pixels dark; preprocessing wants them bright.
pub fn register_image(plan: &FloorPlan, image: &GrayImage, cfg: PreprocessConfig) -> Result<RegisterReport> {
    let start = Instant::now();
    let region = preprocess_lidar_region(&image.inverted(), cfg.filter, cfg.tolerance)?;
    let result = register(&region.mask, plan)?;
    let time_s = start.elapsed().as_secs_f64();
    let (ox, oy) = region.origin;
    Ok(RegisterReport {
        image_placement: result.placement.translated(ox as f64, oy as f64),
        result,
        crop_origin: region.origin,
        preprocess: cfg,
        time_s,
    })
}

/// Every room of the plan drawn through `placement`.
pub fn placed_plan_mask(plan: &FloorPlan, placement: &Placement, width: usize, height: usize) -> Result<BinaryMask> {
    let mut m = BinaryMask::new(width, height);
    for room in &plan.rooms {
        fill_polygon(&mut m, &placement.map_polygon(&room.outline)?, true);
    }
    Ok(m)
}

pub fn run_register(
    plan_path: &Path,
    lidar_path: &Path,
    out_path: &Path,
    mask_path: Option<&Path>,
    cfg: PreprocessConfig,
) -> Result<RegisterReport> {
    let plan = read_plan(plan_path)?;
    let image = pgm::read(lidar_path).with_context(|| format!("reading {}", lidar_path.display()))?;
    let report = register_image(&plan, &image, cfg).with_context(|| format!("registering {}", lidar_path.display()))?;
    std::fs::write(out_path, serde_json::to_string_pretty(&report)?)
        .with_context(|| format!("writing {}", out_path.display()))?;
    if let Some(path) = mask_path {
        let mask = placed_plan_mask(&plan, &report.image_placement, image.width(), image.height())?;
        pgm::write(path, &pgm::mask_to_gray(&mask), PgmFormat::Binary).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(report)
}
