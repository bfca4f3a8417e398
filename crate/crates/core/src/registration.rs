//! Morphological floor-plan registration.
//!
//! Both the LiDAR mask and every floor-plan variant are cropped to their
//! content and squashed to a `200 × 200` grid. Every variant is scored under
//! all eight dihedral transforms by cell-count IoU; the best candidate fixes
//! rotation and flip, and the matched extents at native resolution give the
//! horizontal and vertical scale.

use std::collections::BTreeSet;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::d4::{Flip, Rotation, D4};
use crate::error::{Error, Result};
use crate::floorplan::{render_rooms, render_subset, variant_subsets, FloorPlan, Framing};
use crate::geometry::{simplify_contour, signed_area, trace_contours, Extent, Point, Polygon};
use crate::raster::{
    apply_d4, binarize, crop_with_origin, fill_holes, fill_polygon, filter_components, mask_iou, resize_nn,
    BinaryMask, Connectivity, GrayImage, PackedMask,
};

/// Side of the square grid candidates are compared on.
pub const REGISTRATION_SIZE: usize = 200;

/// Thresholds for turning a grayscale scan into structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentFilterConfig {
    /// Pixels at or above this value are occupied.
    pub theta: u8,
    /// Components smaller than this many cells are dropped.
    pub alpha: usize,
}

impl Default for ComponentFilterConfig {
    fn default() -> Self {
        ComponentFilterConfig { theta: 128, alpha: 50 }
    }
}

/// A preprocessed LiDAR region and where its crop sits in the source image.
#[derive(Debug, Clone, PartialEq)]
pub struct LidarRegion {
    pub mask: BinaryMask,
    pub origin: (usize, usize),
}

/// Binarize, drop small components, smooth the outer boundaries, fill the
/// enclosed region and crop. Expects occupied structure to be bright.
pub fn preprocess_lidar_region(
    img: &GrayImage,
    cfg: ComponentFilterConfig,
    simplify_tol: f64,
) -> Result<LidarRegion> {
    let structure = filter_components(&binarize(img, cfg.theta), cfg.alpha, Connectivity::Eight);
    if structure.is_empty() {
        return Err(Error::EmptyStructure);
    }
    let mut smoothed = BinaryMask::new(structure.width(), structure.height());
    for contour in trace_contours(&structure) {
        if signed_area(&contour) <= 0.0 {
            continue; // holes are filled anyway
        }
        let poly: Polygon = simplify_contour(&contour, simplify_tol)?;
        fill_polygon(&mut smoothed, &poly, true);
    }
    let filled = fill_holes(&smoothed);
    if filled.is_empty() {
        return Err(Error::EmptyStructure);
    }
    let (mask, origin) = crop_with_origin(&filled, 0)?;
    Ok(LidarRegion { mask, origin })
}

pub fn preprocess_lidar(img: &GrayImage, cfg: ComponentFilterConfig, simplify_tol: f64) -> Result<BinaryMask> {
    preprocess_lidar_region(img, cfg, simplify_tol).map(|r| r.mask)
}

/// Rotation, flip and per-axis scale. Scales follow `plan extent / LiDAR extent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformParams {
    pub rot: Rotation,
    pub flip: Flip,
    pub s_h: f64,
    pub s_v: f64,
}

impl TransformParams {
    pub fn element(&self) -> D4 {
        D4::new(self.rot, self.flip)
    }
}

/// Maps plan coordinates into a LiDAR grid: plan units → native plan cells
/// → dihedral transform → divide by scale → translate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub transform: TransformParams,
    /// Plan-unit point that lands on native cell (0, 0).
    pub plan_origin: Point,
    pub cells_per_unit: f64,
    /// Native plan frame the transform acts on, in cells.
    pub frame: (f64, f64),
    pub offset: (f64, f64),
}

impl Placement {
    pub fn map(&self, p: Point) -> Point {
        let c = Point::new(
            (p.x - self.plan_origin.x) * self.cells_per_unit,
            (p.y - self.plan_origin.y) * self.cells_per_unit,
        );
        let t = self.transform.element().apply_point(c, self.frame.0, self.frame.1);
        Point::new(
            t.x / self.transform.s_h + self.offset.0,
            t.y / self.transform.s_v + self.offset.1,
        )
    }

    pub fn map_polygon(&self, poly: &Polygon) -> Result<Polygon> {
        poly.map(|p| self.map(p))
    }

    pub fn translated(mut self, dx: f64, dy: f64) -> Placement {
        self.offset.0 += dx;
        self.offset.1 += dy;
        self
    }
}

/// One scored (variant, transform) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub variant: Vec<String>,
    pub rot: Rotation,
    pub flip: Flip,
    pub iou: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegistrationResult {
    pub rot: Rotation,
    pub flip: Flip,
    pub s_h: f64,
    pub s_v: f64,
    pub variant: Vec<String>,
    pub iou: f64,
    pub candidates: Vec<Candidate>,
    /// Extent of the matched variant after the transform, native cells.
    pub h1: f64,
    pub v1: f64,
    /// Extent of the LiDAR region, cells.
    pub h2: f64,
    pub v2: f64,
    /// Placement of the plan into the grid that was passed to `register`.
    pub placement: Placement,
}

impl RegistrationResult {
    pub fn params(&self) -> TransformParams {
        TransformParams {
            rot: self.rot,
            flip: self.flip,
            s_h: self.s_h,
            s_v: self.s_v,
        }
    }

    pub fn element(&self) -> D4 {
        D4::new(self.rot, self.flip)
    }

    pub fn variant_set(&self) -> BTreeSet<String> {
        self.variant.iter().cloned().collect()
    }
}

struct ScoredVariant {
    ious: [f64; 8],
    /// Occupied bbox in the native frame: origin and size.
    origin: (usize, usize),
    size: (usize, usize),
}

/// Placement of a variant whose native render crops to `size` at `origin`,
/// under `g`, onto a LiDAR region of extent `(h2, v2)` at `lidar_origin`.
/// Also returns the transformed variant extent.
fn placement_for(
    framing: &Framing,
    lidar_origin: (usize, usize),
    (h2, v2): (f64, f64),
    g: D4,
    origin: (usize, usize),
    size: (usize, usize),
) -> (Placement, (f64, f64)) {
    let (fw, fh) = (framing.width as f64, framing.height as f64);
    let a = g.apply_point(Point::new(origin.0 as f64, origin.1 as f64), fw, fh);
    let b = g.apply_point(Point::new((origin.0 + size.0) as f64, (origin.1 + size.1) as f64), fw, fh);
    let variant_origin = (a.x.min(b.x), a.y.min(b.y));
    let (h1, v1) = g.output_dims(size.0 as f64, size.1 as f64);
    let transform = TransformParams {
        rot: g.rot,
        flip: g.flip,
        s_h: h1 / h2,
        s_v: v1 / v2,
    };
    let placement = Placement {
        transform,
        plan_origin: framing.origin,
        cells_per_unit: framing.cells_per_unit,
        frame: (fw, fh),
        offset: (
            lidar_origin.0 as f64 - variant_origin.0 / transform.s_h,
            lidar_origin.1 as f64 - variant_origin.1 / transform.s_v,
        ),
    };
    (placement, (h1, v1))
}

/// Placement that stretches the given rooms under `g` over the bounding box
/// of `lidar`, as `register` does for its winning candidate.
pub fn place(lidar: &BinaryMask, plan: &FloorPlan, rooms: &[usize], g: D4) -> Result<Placement> {
    let (lid, lidar_origin) = crop_with_origin(lidar, 0)?;
    let framing = Framing::native(plan);
    if rooms.iter().any(|&i| i >= plan.rooms.len()) {
        return Err(Error::NoMatch);
    }
    let mask = render_subset(plan, rooms, &framing);
    let (crop, origin) = crop_with_origin(&mask, 0)?;
    let dims = (lid.width() as f64, lid.height() as f64);
    Ok(placement_for(&framing, lidar_origin, dims, g, origin, (crop.width(), crop.height())).0)
}

/// Finds the variant and dihedral transform that best overlay `plan` on
/// `lidar`, then recovers scale and placement.
///
/// Ties resolve to the variant with the most rooms, since squashing can make
/// a subset indistinguishable from a larger variant; then to the earliest
/// variant and the smallest canonical transform id.
pub fn register(lidar: &BinaryMask, plan: &FloorPlan) -> Result<RegistrationResult> {
    let (lid, lidar_origin) = crop_with_origin(lidar, 0)?;
    let (h2, v2) = (lid.width() as f64, lid.height() as f64);
    let squashed = resize_nn(&lid, REGISTRATION_SIZE, REGISTRATION_SIZE);
    // IoU(g·F, L) = IoU(F, g⁻¹·L) on the square grid, so transform L once.
    let lidar_views: Vec<PackedMask> = D4::ALL
        .iter()
        .map(|g| PackedMask::from(&apply_d4(&squashed, g.inverse())))
        .collect();

    let framing = Framing::native(plan);
    let rooms = render_rooms(plan, &framing);
    let subsets = variant_subsets(plan)?;

    let scored: Vec<Option<ScoredVariant>> = subsets
        .par_iter()
        .map(|subset| -> Result<Option<ScoredVariant>> {
            let mut mask = BinaryMask::new(framing.width, framing.height);
            for &i in subset {
                mask.union_with(&rooms[i])?;
            }
            let Ok((crop, origin)) = crop_with_origin(&mask, 0) else {
                return Ok(None);
            };
            let small = PackedMask::from(&resize_nn(&crop, REGISTRATION_SIZE, REGISTRATION_SIZE));
            let mut ious = [0.0; 8];
            for (k, view) in lidar_views.iter().enumerate() {
                ious[k] = small.iou(view)?.iou;
            }
            Ok(Some(ScoredVariant {
                ious,
                origin,
                size: (crop.width(), crop.height()),
            }))
        })
        .collect::<Result<_>>()?;

    let mut candidates = Vec::with_capacity(subsets.len() * 8);
    let mut best: Option<(usize, usize, f64)> = None;
    let beats = |iou: f64, vi: usize, (bv, _, b): (usize, usize, f64)| {
        iou > b || (iou == b && subsets[vi].len() > subsets[bv].len())
    };
    for (vi, (subset, sv)) in subsets.iter().zip(&scored).enumerate() {
        let names: Vec<String> = subset.iter().map(|&i| plan.rooms[i].name.clone()).collect();
        for (k, g) in D4::ALL.iter().enumerate() {
            let iou = sv.as_ref().map_or(0.0, |s| s.ious[k]);
            if sv.is_some() && best.is_none_or(|b| beats(iou, vi, b)) {
                best = Some((vi, k, iou));
            }
            candidates.push(Candidate {
                variant: names.clone(),
                rot: g.rot,
                flip: g.flip,
                iou,
            });
        }
    }
    let (vi, k, iou) = best.ok_or(Error::NoMatch)?;
    if iou <= 0.0 {
        return Err(Error::NoMatch);
    }
    let g = D4::ALL[k];
    let sv = scored[vi].as_ref().expect("best candidate was scored");
    let (placement, (h1, v1)) = placement_for(&framing, lidar_origin, (h2, v2), g, sv.origin, sv.size);
    let transform = placement.transform;

    Ok(RegistrationResult {
        rot: g.rot,
        flip: g.flip,
        s_h: transform.s_h,
        s_v: transform.s_v,
        variant: subsets[vi].iter().map(|&i| plan.rooms[i].name.clone()).collect(),
        iou,
        candidates,
        h1,
        v1,
        h2,
        v2,
        placement,
    })
}

/// Mean of the per-room IoUs.
pub fn iou_a(per_room_ious: &[f64]) -> Result<f64> {
    if per_room_ious.is_empty() {
        return Err(Error::EmptyIouList);
    }
    Ok(per_room_ious.iter().sum::<f64>() / per_room_ious.len() as f64)
}

/// IoU of two polygons, rasterized on a common unit-cell canvas.
pub fn polygon_iou(a: &Polygon, b: &Polygon) -> f64 {
    let bb = a.bounds().expect("polygon").union(&b.bounds().expect("polygon"));
    let (x0, y0) = (bb.min_x.floor() - 1.0, bb.min_y.floor() - 1.0);
    let w = (bb.max_x.ceil() - x0) as usize + 2;
    let h = (bb.max_y.ceil() - y0) as usize + 2;
    let shift = |p: Point| Point::new(p.x - x0, p.y - y0);
    let mut ma = BinaryMask::new(w, h);
    let mut mb = BinaryMask::new(w, h);
    fill_polygon(&mut ma, &a.map(shift).expect("translation"), true);
    fill_polygon(&mut mb, &b.map(shift).expect("translation"), true);
    mask_iou(&ma, &mb).expect("same canvas").iou
}

/// A registration problem with a known answer.
#[derive(Debug, Clone)]
pub struct EvalCase {
    pub plan: FloorPlan,
    /// Preprocessed LiDAR region.
    pub lidar: BinaryMask,
    /// Ground-truth placement of the plan in `lidar`'s grid.
    pub truth: Placement,
    pub completeness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseOutcome {
    pub completeness: f64,
    pub rotation_ok: bool,
    pub fold_ok: bool,
    /// Best candidate IoU on the squashed grid.
    pub fused_iou: f64,
    pub room_ious: Vec<f64>,
    pub iou_a: f64,
    pub scale_error: f64,
    pub time_s: f64,
    pub result_rot: Rotation,
    pub result_flip: Flip,
    pub s_h: f64,
    pub s_v: f64,
}

/// Registers one case and scores it against the truth.
pub fn evaluate_case(case: &EvalCase) -> Result<CaseOutcome> {
    let start = Instant::now();
    let result = register(&case.lidar, &case.plan);
    let time_s = start.elapsed().as_secs_f64();
    let truth = case.truth.transform;
    let (rotation_ok, fold_ok, room_ious, fused, params) = match result {
        Ok(r) => {
            let mut ious = Vec::with_capacity(case.plan.rooms.len());
            for room in &case.plan.rooms {
                let want = case.truth.map_polygon(&room.outline)?;
                let got = r.placement.map_polygon(&room.outline)?;
                ious.push(polygon_iou(&want, &got));
            }
            (r.rot == truth.rot, r.flip == truth.flip, ious, r.iou, Some(r.params()))
        }
        Err(Error::NoMatch) => (false, false, vec![0.0; case.plan.rooms.len()], 0.0, None),
        Err(e) => return Err(e),
    };
    let (s_h, s_v) = params.map_or((f64::NAN, f64::NAN), |p| (p.s_h, p.s_v));
    let scale_error = ((s_h - truth.s_h).abs() / truth.s_h).max((s_v - truth.s_v).abs() / truth.s_v);
    Ok(CaseOutcome {
        completeness: case.completeness,
        rotation_ok,
        fold_ok,
        fused_iou: fused,
        iou_a: iou_a(&room_ious)?,
        room_ious,
        scale_error: if scale_error.is_nan() { f64::INFINITY } else { scale_error },
        time_s,
        result_rot: params.map_or(Rotation::R0, |p| p.rot),
        result_flip: params.map_or(Flip::None, |p| p.flip),
        s_h,
        s_v,
    })
}

/// Aggregate registration quality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub n_cases: usize,
    pub fold_accuracy: f64,
    pub rotation_accuracy: f64,
    pub iou_a: f64,
    pub mean_fused_iou: f64,
    pub mean_time_s: f64,
}

impl MetricsReport {
    pub fn from_outcomes(outcomes: &[CaseOutcome]) -> Option<MetricsReport> {
        if outcomes.is_empty() {
            return None;
        }
        let n = outcomes.len() as f64;
        let frac = |f: &dyn Fn(&CaseOutcome) -> bool| outcomes.iter().filter(|o| f(o)).count() as f64 / n;
        let mean = |f: &dyn Fn(&CaseOutcome) -> f64| outcomes.iter().map(f).sum::<f64>() / n;
        Some(MetricsReport {
            n_cases: outcomes.len(),
            fold_accuracy: frac(&|o| o.fold_ok),
            rotation_accuracy: frac(&|o| o.rotation_ok),
            iou_a: mean(&|o| o.iou_a),
            mean_fused_iou: mean(&|o| o.fused_iou),
            mean_time_s: mean(&|o| o.time_s),
        })
    }
}

/// Registers every case in order and aggregates.
pub fn evaluate(dataset: &[EvalCase]) -> Result<(MetricsReport, Vec<CaseOutcome>)> {
    let outcomes = dataset.iter().map(evaluate_case).collect::<Result<Vec<_>>>()?;
    let report = MetricsReport::from_outcomes(&outcomes).ok_or(Error::EmptyGeometry("empty dataset"))?;
    Ok((report, outcomes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::floorplan::{render_subset, Room, RoomKind};

    /// L-shaped living room with two bedrooms; no dihedral symmetry.
    pub(crate) fn asymmetric_plan() -> FloorPlan {
        let poly = |v: &[(f64, f64)]| Polygon::new(v.iter().map(|&p| p.into()).collect()).unwrap();
        FloorPlan::new(
            0.1,
            vec![
                Room {
                    name: "L".into(),
                    kind: RoomKind::LivingRoom,
                    outline: poly(&[(0.0, 0.0), (9.0, 0.0), (9.0, 4.0), (5.0, 4.0), (5.0, 7.0), (0.0, 7.0)]),
                },
                Room {
                    name: "B1".into(),
                    kind: RoomKind::Bedroom,
                    outline: poly(&[(9.0, 0.0), (13.0, 0.0), (13.0, 4.0), (9.0, 4.0)]),
                },
                Room {
                    name: "B2".into(),
                    kind: RoomKind::Bedroom,
                    outline: poly(&[(5.0, 4.0), (9.0, 4.0), (9.0, 9.5), (5.0, 9.5)]),
                },
            ],
        )
        .unwrap()
    }

    fn full_render(plan: &FloorPlan) -> BinaryMask {
        let framing = Framing::native(plan);
        let all: Vec<usize> = (0..plan.rooms.len()).collect();
        render_subset(plan, &all, &framing)
    }

    #[test]
    fn identity_registration() {
        let plan = asymmetric_plan();
        let lidar = full_render(&plan);
        let r = register(&lidar, &plan).unwrap();
        assert_eq!(r.element(), D4::IDENTITY);
        assert!((r.iou - 1.0).abs() <= 0.02);
        assert!((r.s_h - 1.0).abs() < 1e-9 && (r.s_v - 1.0).abs() < 1e-9);
        assert_eq!(r.variant, vec!["L", "B1", "B2"]);
        assert_eq!(r.candidates.len(), 4 * 8);
        let max = r.candidates.iter().map(|c| c.iou).fold(0.0, f64::max);
        assert_eq!(r.iou, max);
        // Placement maps the plan back onto itself.
        let p = r.placement.map(Point::new(9.0, 4.0));
        assert!((p.x - 90.0).abs() < 1e-9 && (p.y - 40.0).abs() < 1e-9);
    }

    #[test]
    fn recovers_forward_transform() {
        let plan = asymmetric_plan();
        let g = D4::new(Rotation::R90, Flip::Horizontal);
        let lidar = apply_d4(&full_render(&plan), g);
        let r = register(&lidar, &plan).unwrap();
        assert_eq!(r.element(), g);
        assert!(r.iou >= 0.98);
    }

    #[test]
    fn partial_coverage_picks_matching_variant() {
        let plan = asymmetric_plan();
        let framing = Framing::native(&plan);
        let partial = render_subset(&plan, &[0, 1], &framing);
        let g = D4::new(Rotation::R180, Flip::None);
        let r = register(&apply_d4(&partial, g), &plan).unwrap();
        assert_eq!(r.variant, vec!["L", "B1"]);
        assert_eq!(r.rot, Rotation::R180);
        assert_eq!(r.flip, Flip::None);
    }

    #[test]
    fn place_agrees_with_register() {
        let plan = asymmetric_plan();
        let framing = Framing::native(&plan);
        let g = D4::new(Rotation::R270, Flip::Horizontal);
        let lidar = apply_d4(&render_subset(&plan, &[0, 2], &framing), g);
        let r = register(&lidar, &plan).unwrap();
        assert_eq!(r.variant, vec!["L", "B2"]);
        let placed = place(&lidar, &plan, &[0, 2], r.element()).unwrap();
        assert_eq!(placed, r.placement);
        assert!(place(&BinaryMask::new(8, 8), &plan, &[0, 2], g).is_err());
    }

    #[test]
    fn scale_recovery() {
        let plan = asymmetric_plan();
        let full = full_render(&plan);
        for (a, b) in [(1.25, 0.8), (0.7, 1.4), (2.0, 2.0)] {
            // Plan extent / LiDAR extent = (a, b).
            let w = (full.width() as f64 / a).round() as usize;
            let h = (full.height() as f64 / b).round() as usize;
            let lidar = resize_nn(&full, w, h);
            let r = register(&lidar, &plan).unwrap();
            assert!((r.s_h - a).abs() / a < 0.05, "{} vs {a}", r.s_h);
            assert!((r.s_v - b).abs() / b < 0.05, "{} vs {b}", r.s_v);
        }
    }

    #[test]
    fn symmetric_plan_ties_break_to_identity() {
        let plan = FloorPlan::new(
            1.0,
            vec![Room {
                name: "L".into(),
                kind: RoomKind::LivingRoom,
                outline: Polygon::rect(0.0, 0.0, 50.0, 50.0).unwrap(),
            }],
        )
        .unwrap();
        let lidar = full_render(&plan);
        let r = register(&lidar, &plan).unwrap();
        assert!(r.candidates.iter().all(|c| (c.iou - r.iou).abs() <= 1e-9));
        assert_eq!(r.element().id(), 0);
    }

    #[test]
    fn disjoint_lidar_is_no_match() {
        // A triangle too thin to cover any cell centre at native resolution.
        let plan = FloorPlan::new(
            1.0,
            vec![Room {
                name: "L".into(),
                kind: RoomKind::LivingRoom,
                outline: Polygon::new(vec![
                    Point::new(0.0, 0.0),
                    Point::new(1.0, 0.0),
                    Point::new(0.0, 1.0),
                ])
                .unwrap(),
            }],
        )
        .unwrap();
        let lidar = BinaryMask::from_fn(4, 4, |x, y| x == 3 && y == 3);
        // The plan renders to no cells at all.
        assert!(matches!(register(&lidar, &plan), Err(Error::NoMatch)));
    }

    #[test]
    fn iou_a_mean() {
        assert!((iou_a(&[1.0, 0.8, 0.6]).unwrap() - 0.8).abs() < 1e-12);
        assert_eq!(iou_a(&[0.37]).unwrap(), 0.37);
        assert!(matches!(iou_a(&[]), Err(Error::EmptyIouList)));
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let v: Vec<f64> = (0..50).map(|_| rng.random()).collect();
        let mut rev = v.clone();
        rev.reverse();
        let pairwise: f64 = rev.chunks(2).map(|c| c.iter().sum::<f64>()).sum();
        assert!((iou_a(&v).unwrap() - pairwise / 50.0).abs() < 1e-12);
    }

    fn gray(mask: &BinaryMask) -> GrayImage {
        mask.to_gray(255, 0)
    }

    #[test]
    fn preprocess_room_scan() {
        // Wall outline of a rectangular room plus speckles.
        let walls = BinaryMask::from_fn(80, 60, |x, y| {
            let on_rect = (10..=60).contains(&x) && (8..=45).contains(&y);
            let edge = x == 10 || x == 60 || y == 8 || y == 45;
            on_rect && edge
        });
        let clean = preprocess_lidar(&gray(&walls), ComponentFilterConfig::default(), 2.0).unwrap();
        assert_eq!(clean, BinaryMask::from_fn(51, 38, |_, _| true));
        let mut noisy = walls.clone();
        for (x, y) in [(2, 2), (3, 2), (70, 55), (75, 3), (30, 25), (31, 25)] {
            noisy.set(x, y, true);
        }
        let out = preprocess_lidar(&gray(&noisy), ComponentFilterConfig::default(), 2.0).unwrap();
        assert_eq!(out, clean);
        // Fixpoint.
        let again = preprocess_lidar(&gray(&out), ComponentFilterConfig::default(), 2.0).unwrap();
        assert_eq!(again, out);
        assert!(matches!(
            preprocess_lidar(&gray(&BinaryMask::new(5, 5)), ComponentFilterConfig::default(), 2.0),
            Err(Error::EmptyStructure)
        ));
    }

    #[test]
    fn preprocess_is_idempotent_on_rectilinear_regions() {
        let plan = asymmetric_plan();
        let region = full_render(&plan);
        let framed = BinaryMask::from_fn(region.width() + 20, region.height() + 20, |x, y| {
            x >= 10 && y >= 10 && x < region.width() + 10 && y < region.height() + 10 && region.get(x - 10, y - 10)
        });
        let cfg = ComponentFilterConfig::default();
        let r = preprocess_lidar_region(&gray(&framed), cfg, 2.0).unwrap();
        assert_eq!(r.origin, (10, 10));
        assert_eq!(r.mask, region);
        assert_eq!(preprocess_lidar(&gray(&r.mask), cfg, 2.0).unwrap(), r.mask);
    }

    #[test]
    fn evaluate_oracle_perfect() {
        let plan = asymmetric_plan();
        let lidar = full_render(&plan);
        let framing = Framing::native(&plan);
        let truth = Placement {
            transform: TransformParams {
                rot: Rotation::R0,
                flip: Flip::None,
                s_h: 1.0,
                s_v: 1.0,
            },
            plan_origin: framing.origin,
            cells_per_unit: framing.cells_per_unit,
            frame: (framing.width as f64, framing.height as f64),
            offset: (0.0, 0.0),
        };
        let case = EvalCase {
            plan,
            lidar,
            truth,
            completeness: 1.0,
        };
        let (report, outcomes) = evaluate(&[case.clone(), case]).unwrap();
        assert_eq!(report.rotation_accuracy, 1.0);
        assert_eq!(report.fold_accuracy, 1.0);
        assert!((report.iou_a - 1.0).abs() <= 0.02);
        assert_eq!(outcomes.len(), 2);
    }
}
