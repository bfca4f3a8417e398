//! Registers every case of a dataset and aggregates accuracy, IoU_a and
//! timing, overall and per completeness bucket.

use std::fmt::Write as _;

use anyhow::{ensure, Result};
use planreg_core::registration::{evaluate_case, preprocess_lidar_region, CaseOutcome, ComponentFilterConfig, EvalCase, MetricsReport};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::LoadedCase;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    pub filter: ComponentFilterConfig,
    /// Contour simplification tolerance, cells.
    pub tolerance: f64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            filter: ComponentFilterConfig::default(),
            tolerance: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketReport {
    pub completeness: f64,
    pub metrics: MetricsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub overall: MetricsReport,
    pub buckets: Vec<BucketReport>,
    pub outcomes: Vec<NamedOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedOutcome {
    pub dir: String,
    #[serde(flatten)]
    pub outcome: CaseOutcome,
}

/// Preprocesses the stored image (occupied pixels are dark) and moves the
/// truth into the cropped region's frame.
pub fn to_eval_case(case: &LoadedCase, cfg: PreprocessConfig) -> Result<EvalCase> {
    let region = preprocess_lidar_region(&case.image.inverted(), cfg.filter, cfg.tolerance)?;
    let (ox, oy) = region.origin;
    Ok(EvalCase {
        plan: case.plan.clone(),
        lidar: region.mask,
        truth: case.truth.placement.translated(-(ox as f64), -(oy as f64)),
        completeness: case.truth.completeness,
    })
}

pub fn evaluate_cases(cases: &[LoadedCase], cfg: PreprocessConfig) -> Result<EvaluationReport> {
    ensure!(!cases.is_empty(), "dataset is empty");
    let outcomes: Vec<NamedOutcome> = cases
        .par_iter()
        .map(|c| {
            let outcome = evaluate_case(&to_eval_case(c, cfg)?)?;
            Ok(NamedOutcome {
                dir: c.dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
                outcome,
            })
        })
        .collect::<Result<_>>()?;
    let plain: Vec<CaseOutcome> = outcomes.iter().map(|o| o.outcome.clone()).collect();
    let overall = MetricsReport::from_outcomes(&plain).expect("non-empty");
    let mut levels: Vec<f64> = plain.iter().map(|o| o.completeness).collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let buckets = levels
        .into_iter()
        .map(|level| {
            let sel: Vec<CaseOutcome> = plain.iter().filter(|o| o.completeness == level).cloned().collect();
            BucketReport {
                completeness: level,
                metrics: MetricsReport::from_outcomes(&sel).expect("bucket has cases"),
            }
        })
        .collect();
    Ok(EvaluationReport {
        overall,
        buckets,
        outcomes,
    })
}

/// Fixed-width table, one row per bucket and a final overall row.
pub fn render_table(report: &EvaluationReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<14} {:>6} {:>18} {:>22} {:>10} {:>12} {:>16}",
        "Completeness", "Cases", "Fold Accuracy(%)", "Rotation Accuracy(%)", "IoU_a(%)", "Fused IoU(%)", "Average Time(s)"
    );
    let mut row = |label: String, m: &MetricsReport| {
        let _ = writeln!(
            s,
            "{:<14} {:>6} {:>18.1} {:>22.1} {:>10.1} {:>12.1} {:>16.4}",
            label,
            m.n_cases,
            100.0 * m.fold_accuracy,
            100.0 * m.rotation_accuracy,
            100.0 * m.iou_a,
            100.0 * m.mean_fused_iou,
            m.mean_time_s
        );
    };
    for b in &report.buckets {
        row(format!("{:.0}%", 100.0 * b.completeness), &b.metrics);
    }
    row("overall".into(), &report.overall);
    s
}
