//! Translation-only re-localization by matching the scanned structure
//! around the robot against the motion map's walls.

use crate::error::{Error, Result};
use crate::raster::{dilate, BinaryMask};

use super::scan::{beam_end_cell, Beam};
use super::Pose;

/// Patch of side `2 * half + 1` holding the scan's hit cells relative to
/// the robot, whose own cell is the centre.
pub fn local_structure(pose: Pose, scan: &[Beam], half: usize) -> BinaryMask {
    let side = 2 * half + 1;
    let mut patch = BinaryMask::new(side, side);
    let (cx, cy) = pose.cell();
    for b in scan.iter().filter(|b| b.hit) {
        let Some((x, y)) = beam_end_cell(pose, b) else { continue };
        let (px, py) = (x - cx + half as i64, y - cy + half as i64);
        if px >= 0 && py >= 0 && (px as usize) < side && (py as usize) < side {
            patch.set(px as usize, py as usize, true);
        }
    }
    patch
}

/// 2 on wall cells, 1 on cells touching a wall (8-neighbourhood), else 0.
pub fn wall_weights(walls: &BinaryMask) -> Vec<u8> {
    let near = dilate(walls, 1);
    walls
        .cells()
        .iter()
        .zip(near.cells())
        .map(|(&w, &n)| if w { 2 } else { n as u8 })
        .collect()
}

/// Searches every integer offset within `search_radius` cells of the prior
/// and returns the prior shifted by the best-scoring one. Ties go to the
/// smallest offset, then row-major order. The heading is kept.
pub fn localize(local: &BinaryMask, motion_map: &BinaryMask, prior: Pose, search_radius: f64) -> Result<Pose> {
    let pts: Vec<(i64, i64)> = (0..local.height())
        .flat_map(|y| (0..local.width()).map(move |x| (x, y)))
        .filter(|&(x, y)| local.get(x, y))
        .map(|(x, y)| (x as i64 - (local.width() / 2) as i64, y as i64 - (local.height() / 2) as i64))
        .collect();
    if pts.is_empty() {
        return Err(Error::LocalizationFailed);
    }
    let weights = wall_weights(motion_map);
    let (w, h) = (motion_map.width() as i64, motion_map.height() as i64);
    let (cx, cy) = prior.cell();
    let r = search_radius.max(0.0).floor() as i64;
    let mut offsets: Vec<(i64, i64)> = (-r..=r)
        .flat_map(|dy| (-r..=r).map(move |dx| (dx, dy)))
        .filter(|&(dx, dy)| ((dx * dx + dy * dy) as f64) <= search_radius * search_radius)
        .collect();
    offsets.sort_by_key(|&(dx, dy)| (dx * dx + dy * dy, dy, dx));
    let scores: Vec<u32> = offsets
        .iter()
        .map(|&(dx, dy)| {
            pts.iter()
                .map(|&(px, py)| {
                    let (x, y) = (cx + px + dx, cy + py + dy);
                    if x < 0 || y < 0 || x >= w || y >= h {
                        0
                    } else {
                        weights[(y * w + x) as usize] as u32
                    }
                })
                .sum()
        })
        .collect();
    let max = *scores.iter().max().expect("offset zero is always searched");
    let min = *scores.iter().min().expect("non-empty");
    if max == 0 || max == min {
        return Err(Error::LocalizationFailed);
    }
    let best = scores.iter().position(|&s| s == max).expect("max exists");
    let (dx, dy) = offsets[best];
    Ok(Pose::new(prior.x + dx as f64, prior.y + dy as f64, prior.heading))
}

/// Sub-cell correction after `localize`. Beams stop on cell faces, so every
/// hit that lands on a wall face of `walls` should sit exactly on a grid
/// line; the median distance to that line along each axis is the residual
/// offset. An axis with fewer than `MIN_FACE_HITS` hits is left alone.
pub fn refine_subcell(pose: Pose, scan: &[Beam], walls: &BinaryMask) -> Pose {
    let mut res: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    for b in scan.iter().filter(|b| b.hit) {
        let (s, c) = b.angle.sin_cos();
        let (px, py) = (pose.x + b.range * c, pose.y + b.range * s);
        let (rx, ry) = (px - px.round(), py - py.round());
        // Face crossed: whichever grid line is nearer along the beam.
        let along = |r: f64, d: f64| if d.abs() < 1e-9 { f64::INFINITY } else { (r / d).abs() };
        let (axis, r) = if along(rx, c) <= along(ry, s) { (0, rx) } else { (1, ry) };
        let Some((x, y)) = beam_end_cell(pose, b) else { continue };
        let (bx, by) = if axis == 0 { (x - c.signum() as i64, y) } else { (x, y - s.signum() as i64) };
        if walls.get_signed(x, y) && !walls.get_signed(bx, by) {
            res[axis].push(r);
        }
    }
    let shift = |v: &mut Vec<f64>| -> f64 {
        if v.len() < MIN_FACE_HITS {
            return 0.0;
        }
        v.sort_by(f64::total_cmp);
        -v[v.len() / 2]
    };
    Pose::new(pose.x + shift(&mut res[0]), pose.y + shift(&mut res[1]), pose.heading)
}

const MIN_FACE_HITS: usize = 5;
