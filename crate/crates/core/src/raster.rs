//! Binary and tri-state grids and the mask pipeline built on them:
//! thresholding, component filtering, flood fill, cropping, resizing,
//! polygon rasterization, IoU and the dihedral transforms.

use std::collections::VecDeque;

use crate::d4::D4;
use crate::error::{Error, Result};
use crate::geometry::{Point, Polygon};

/// 8-bit grayscale image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::InvalidDimensions { width, height });
        }
        Ok(GrayImage {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        GrayImage {
            width,
            height,
            pixels: vec![value; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.pixels[y * self.width + x] = v;
    }

    /// `255 - v` for every pixel. Map files store occupied cells dark; the
    /// preprocessing pipeline expects occupied structure bright.
    pub fn inverted(&self) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            pixels: self.pixels.iter().map(|&v| 255 - v).collect(),
        }
    }
}

/// Inclusive cell rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellRect {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl CellRect {
    pub fn width(&self) -> usize {
        self.x1 - self.x0 + 1
    }

    pub fn height(&self) -> usize {
        self.y1 - self.y0 + 1
    }
}

/// Row-major grid of occupied (`true`) / empty cells.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    cells: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize) -> Self {
        BinaryMask {
            width,
            height,
            cells: vec![false; width * height],
        }
    }

    pub fn from_cells(width: usize, height: usize, cells: Vec<bool>) -> Result<Self> {
        if cells.len() != width * height {
            return Err(Error::InvalidDimensions { width, height });
        }
        Ok(BinaryMask {
            width,
            height,
            cells,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut cells = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                cells.push(f(x, y));
            }
        }
        BinaryMask {
            width,
            height,
            cells,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.cells[y * self.width + x]
    }

    /// Like `get`, but cells outside the grid read as empty.
    #[inline]
    pub fn get_signed(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height && self.get(x as usize, y as usize)
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.cells[y * self.width + x] = v;
    }

    pub fn count_ones(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.cells.iter().any(|&c| c)
    }

    /// Cell-wise OR. Dimensions must match.
    pub fn union_with(&mut self, other: &BinaryMask) -> Result<()> {
        check_shape(self, other)?;
        for (a, &b) in self.cells.iter_mut().zip(&other.cells) {
            *a |= b;
        }
        Ok(())
    }

    pub fn occupied_rect(&self) -> Option<CellRect> {
        let mut rect: Option<CellRect> = None;
        for y in 0..self.height {
            let row = &self.cells[y * self.width..(y + 1) * self.width];
            let Some(first) = row.iter().position(|&c| c) else {
                continue;
            };
            let last = row.iter().rposition(|&c| c).unwrap_or(first);
            rect = Some(match rect {
                None => CellRect {
                    x0: first,
                    y0: y,
                    x1: last,
                    y1: y,
                },
                Some(r) => CellRect {
                    x0: r.x0.min(first),
                    y0: r.y0,
                    x1: r.x1.max(last),
                    y1: y,
                },
            });
        }
        rect
    }

    /// Copy of the cells inside `rect`.
    pub fn sub_mask(&self, rect: CellRect) -> BinaryMask {
        BinaryMask::from_fn(rect.width(), rect.height(), |x, y| {
            self.get(rect.x0 + x, rect.y0 + y)
        })
    }

    pub fn to_gray(&self, occupied: u8, empty: u8) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            pixels: self
                .cells
                .iter()
                .map(|&c| if c { occupied } else { empty })
                .collect(),
        }
    }
}

fn check_shape(a: &BinaryMask, b: &BinaryMask) -> Result<()> {
    if a.width != b.width || a.height != b.height {
        return Err(Error::ShapeMismatch {
            a_w: a.width,
            a_h: a.height,
            b_w: b.width,
            b_h: b.height,
        });
    }
    Ok(())
}

/// State of one occupancy-map cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Cell {
    #[default]
    Unknown,
    Free,
    Occupied,
}

/// Tri-state occupancy grid, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OccupancyGrid {
    width: usize,
    height: usize,
    cells: Vec<Cell>,
}

impl OccupancyGrid {
    pub fn new(width: usize, height: usize) -> Self {
        OccupancyGrid {
            width,
            height,
            cells: vec![Cell::Unknown; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Cell {
        self.cells[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: Cell) {
        self.cells[y * self.width + x] = c;
    }

    pub fn in_bounds(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height
    }

    pub fn count(&self, c: Cell) -> usize {
        self.cells.iter().filter(|&&v| v == c).count()
    }

    pub fn mask_of(&self, pred: impl Fn(Cell) -> bool) -> BinaryMask {
        BinaryMask {
            width: self.width,
            height: self.height,
            cells: self.cells.iter().map(|&c| pred(c)).collect(),
        }
    }
}

/// Thresholds `img`: a cell is occupied iff its pixel is at least `theta`.
pub fn binarize(img: &GrayImage, theta: u8) -> BinaryMask {
    BinaryMask {
        width: img.width,
        height: img.height,
        cells: img.pixels.iter().map(|&p| p >= theta).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Connectivity {
    Four,
    #[default]
    Eight,
}

impl Connectivity {
    fn offsets(self) -> &'static [(i64, i64)] {
        const FOUR: [(i64, i64); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
        const EIGHT: [(i64, i64); 8] = [
            (1, 0),
            (-1, 0),
            (0, 1),
            (0, -1),
            (1, 1),
            (1, -1),
            (-1, 1),
            (-1, -1),
        ];
        match self {
            Connectivity::Four => &FOUR,
            Connectivity::Eight => &EIGHT,
        }
    }
}

/// Labels occupied components. Label 0 is background; component `k` has
/// label `k + 1` and area `areas[k]`.
pub fn label_components(mask: &BinaryMask, conn: Connectivity) -> (Vec<u32>, Vec<usize>) {
    let (w, h) = (mask.width, mask.height);
    let mut labels = vec![0u32; w * h];
    let mut areas = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..w * h {
        if !mask.cells[start] || labels[start] != 0 {
            continue;
        }
        let label = areas.len() as u32 + 1;
        let mut area = 0;
        labels[start] = label;
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            area += 1;
            let (x, y) = ((i % w) as i64, (i / w) as i64);
            for &(dx, dy) in conn.offsets() {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                if mask.cells[j] && labels[j] == 0 {
                    labels[j] = label;
                    queue.push_back(j);
                }
            }
        }
        areas.push(area);
    }
    (labels, areas)
}

/// Keeps only occupied cells whose component has at least `alpha` cells.
pub fn filter_components(mask: &BinaryMask, alpha: usize, conn: Connectivity) -> BinaryMask {
    let (labels, areas) = label_components(mask, conn);
    BinaryMask {
        width: mask.width,
        height: mask.height,
        cells: labels
            .iter()
            .map(|&l| l != 0 && areas[(l - 1) as usize] >= alpha)
            .collect(),
    }
}

/// Sets every cell 4-connected to `seed` (and sharing its value) to `value`.
pub fn flood_fill(mask: &BinaryMask, seed: Point, value: bool) -> Result<BinaryMask> {
    let (sx, sy) = (seed.x.floor(), seed.y.floor());
    if !(sx >= 0.0 && sy >= 0.0 && (sx as usize) < mask.width && (sy as usize) < mask.height) {
        return Err(Error::OutOfBounds {
            x: sx as i64,
            y: sy as i64,
            width: mask.width,
            height: mask.height,
        });
    }
    let mut out = mask.clone();
    let reach = reachable_from(mask, &[(sx as usize, sy as usize)]);
    for (i, r) in reach.iter().enumerate() {
        if *r {
            out.cells[i] = value;
        }
    }
    Ok(out)
}

/// Cells 4-connected to any seed through cells with the seed's value.
fn reachable_from(mask: &BinaryMask, seeds: &[(usize, usize)]) -> Vec<bool> {
    let (w, h) = (mask.width, mask.height);
    let mut seen = vec![false; w * h];
    let mut queue = VecDeque::new();
    for &(x, y) in seeds {
        let i = y * w + x;
        if !seen[i] {
            seen[i] = true;
            queue.push_back(i);
        }
    }
    while let Some(i) = queue.pop_front() {
        let target = mask.cells[i];
        let (x, y) = (i % w, i / w);
        let mut visit = |j: usize| {
            if !seen[j] && mask.cells[j] == target {
                seen[j] = true;
                queue.push_back(j);
            }
        };
        if x > 0 {
            visit(i - 1);
        }
        if x + 1 < w {
            visit(i + 1);
        }
        if y > 0 {
            visit(i - w);
        }
        if y + 1 < h {
            visit(i + w);
        }
    }
    seen
}

/// Fills every empty region that is not 4-connected to the grid border.
pub fn fill_holes(mask: &BinaryMask) -> BinaryMask {
    let (w, h) = (mask.width, mask.height);
    let mut seeds = Vec::new();
    for x in 0..w {
        for y in [0, h.saturating_sub(1)] {
            if h > 0 && !mask.get(x, y) {
                seeds.push((x, y));
            }
        }
    }
    for y in 0..h {
        for x in [0, w.saturating_sub(1)] {
            if w > 0 && !mask.get(x, y) {
                seeds.push((x, y));
            }
        }
    }
    let exterior = reachable_from(mask, &seeds);
    BinaryMask {
        width: w,
        height: h,
        cells: mask
            .cells
            .iter()
            .zip(&exterior)
            .map(|(&c, &ext)| c || !ext)
            .collect(),
    }
}

/// Square-window minimum (`erode`) or maximum (`dilate`) of radius `r`,
/// computed separably. Cells outside the grid read as empty.
fn window_op(mask: &BinaryMask, r: usize, erode: bool) -> BinaryMask {
    let (w, h) = (mask.width, mask.height);
    let pass = |src: &[bool], len: usize, stride: usize, lines: usize, step: usize| -> Vec<bool> {
        let mut out = vec![false; src.len()];
        for line in 0..lines {
            let base = line * step;
            // Prefix sums of set cells along the line.
            let mut prefix = vec![0usize; len + 1];
            for k in 0..len {
                prefix[k + 1] = prefix[k] + src[base + k * stride] as usize;
            }
            for k in 0..len {
                let lo = k.saturating_sub(r);
                let hi = (k + r + 1).min(len);
                let set = prefix[hi] - prefix[lo];
                out[base + k * stride] = if erode {
                    set == 2 * r + 1
                } else {
                    set > 0
                };
            }
        }
        out
    };
    let rows = pass(&mask.cells, w, 1, h, w);
    let cells = pass(&rows, h, w, w, 1);
    BinaryMask {
        width: w,
        height: h,
        cells,
    }
}

/// Cells whose whole `(2r+1)²` window is occupied.
pub fn erode(mask: &BinaryMask, r: usize) -> BinaryMask {
    window_op(mask, r, true)
}

/// Cells with any occupied cell in their `(2r+1)²` window.
pub fn dilate(mask: &BinaryMask, r: usize) -> BinaryMask {
    window_op(mask, r, false)
}

/// Erosion followed by dilation: removes parts narrower than `2r+1` cells.
pub fn open(mask: &BinaryMask, r: usize) -> BinaryMask {
    dilate(&erode(mask, r), r)
}

/// Crops to the occupied bounding box grown by `margin` (clamped to the grid)
/// and returns the crop with its top-left corner in the source grid.
pub fn crop_with_origin(mask: &BinaryMask, margin: usize) -> Result<(BinaryMask, (usize, usize))> {
    let r = mask
        .occupied_rect()
        .ok_or(Error::EmptyGeometry("mask has no occupied cells"))?;
    let grown = CellRect {
        x0: r.x0.saturating_sub(margin),
        y0: r.y0.saturating_sub(margin),
        x1: (r.x1 + margin).min(mask.width - 1),
        y1: (r.y1 + margin).min(mask.height - 1),
    };
    Ok((mask.sub_mask(grown), (grown.x0, grown.y0)))
}

pub fn crop_to_content(mask: &BinaryMask, margin: usize) -> Result<BinaryMask> {
    crop_with_origin(mask, margin).map(|(m, _)| m)
}

/// Nearest-neighbour resize. Aspect ratio is not preserved.
///
/// # Panics
/// If either output dimension is zero.
pub fn resize_nn(mask: &BinaryMask, out_w: usize, out_h: usize) -> BinaryMask {
    assert!(out_w > 0 && out_h > 0, "resize target must be non-empty");
    let xs: Vec<usize> = (0..out_w)
        .map(|x| ((2 * x + 1) * mask.width / (2 * out_w)).min(mask.width.saturating_sub(1)))
        .collect();
    let mut cells = Vec::with_capacity(out_w * out_h);
    for y in 0..out_h {
        let sy = ((2 * y + 1) * mask.height / (2 * out_h)).min(mask.height.saturating_sub(1));
        let row = &mask.cells[sy * mask.width..(sy + 1) * mask.width];
        cells.extend(xs.iter().map(|&sx| row[sx]));
    }
    BinaryMask {
        width: out_w,
        height: out_h,
        cells,
    }
}

/// Intersection and union cell counts of two masks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IouStats {
    pub iou: f64,
    pub intersection: usize,
    pub union: usize,
}

impl IouStats {
    fn from_counts(intersection: usize, union: usize) -> Self {
        let iou = if union == 0 {
            0.0
        } else {
            intersection as f64 / union as f64
        };
        IouStats {
            iou,
            intersection,
            union,
        }
    }

    /// Both masks were empty; `iou` is reported as 0.
    pub fn is_degenerate(&self) -> bool {
        self.union == 0
    }
}

pub fn mask_iou(a: &BinaryMask, b: &BinaryMask) -> Result<IouStats> {
    check_shape(a, b)?;
    let (mut inter, mut union) = (0, 0);
    for (&x, &y) in a.cells.iter().zip(&b.cells) {
        inter += usize::from(x && y);
        union += usize::from(x || y);
    }
    Ok(IouStats::from_counts(inter, union))
}

/// Applies a dihedral transform (flip first, then counterclockwise rotation).
pub fn apply_d4(mask: &BinaryMask, g: D4) -> BinaryMask {
    let (w, h) = (mask.width, mask.height);
    let (ow, oh) = g.output_dims(w, h);
    let mut out = BinaryMask::new(ow, oh);
    for y in 0..h {
        for x in 0..w {
            if mask.get(x, y) {
                let (tx, ty) = g.apply_cell(x, y, w, h);
                out.set(tx, ty, true);
            }
        }
    }
    out
}

/// Bit-packed mask for the registration hot loop.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackedMask {
    width: usize,
    height: usize,
    words: Vec<u64>,
}

impl PackedMask {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Same semantics as [`mask_iou`].
    pub fn iou(&self, other: &PackedMask) -> Result<IouStats> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::ShapeMismatch {
                a_w: self.width,
                a_h: self.height,
                b_w: other.width,
                b_h: other.height,
            });
        }
        let (mut inter, mut union) = (0u64, 0u64);
        for (&a, &b) in self.words.iter().zip(&other.words) {
            inter += u64::from((a & b).count_ones());
            union += u64::from((a | b).count_ones());
        }
        Ok(IouStats::from_counts(inter as usize, union as usize))
    }
}

impl From<&BinaryMask> for PackedMask {
    fn from(m: &BinaryMask) -> Self {
        let mut words = vec![0u64; m.cells.len().div_ceil(64)];
        for (i, &c) in m.cells.iter().enumerate() {
            if c {
                words[i / 64] |= 1 << (i % 64);
            }
        }
        PackedMask {
            width: m.width,
            height: m.height,
            words,
        }
    }
}

/// Sets every cell whose centre lies inside `poly` (even-odd rule, half-open
/// on the right and bottom so edge-sharing polygons tile without overlap).
pub fn fill_polygon(mask: &mut BinaryMask, poly: &Polygon, value: bool) {
    let verts = poly.vertices();
    let n = verts.len();
    let mut xs: Vec<f64> = Vec::new();
    let min_y = verts.iter().map(|p| p.y).fold(f64::INFINITY, f64::min);
    let max_y = verts.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max);
    let row_lo = (min_y - 0.5).ceil().max(0.0) as usize;
    let row_hi = ((max_y - 0.5).ceil().max(0.0) as usize).min(mask.height);
    for row in row_lo..row_hi {
        let yc = row as f64 + 0.5;
        xs.clear();
        for i in 0..n {
            let (a, b) = (verts[i], verts[(i + 1) % n]);
            if (a.y <= yc && yc < b.y) || (b.y <= yc && yc < a.y) {
                xs.push(a.x + (yc - a.y) * (b.x - a.x) / (b.y - a.y));
            }
        }
        xs.sort_by(|p, q| p.total_cmp(q));
        for pair in xs.chunks_exact(2) {
            let lo = (pair[0] - 0.5).ceil().max(0.0) as usize;
            let hi = ((pair[1] - 0.5).ceil().max(0.0) as usize).min(mask.width);
            for col in lo..hi {
                mask.set(col, row, value);
            }
        }
    }
}

pub fn rasterize_polygon(poly: &Polygon, width: usize, height: usize) -> BinaryMask {
    let mut m = BinaryMask::new(width, height);
    fill_polygon(&mut m, poly, true);
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::d4::{Flip, Rotation};
    use crate::geometry::{shoelace_area, simplify_contour, trace_contours};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn rect_mask(w: usize, h: usize, x0: usize, y0: usize, x1: usize, y1: usize) -> BinaryMask {
        BinaryMask::from_fn(w, h, |x, y| (x0..x1).contains(&x) && (y0..y1).contains(&y))
    }

    #[test]
    fn binarize_threshold_and_tie() {
        let img = GrayImage::new(3, 1, vec![200, 100, 128]).unwrap();
        let m = binarize(&img, 128);
        assert_eq!(m.cells(), &[true, false, true]);
    }

    #[test]
    fn filter_drops_small_blob() {
        let mut m = rect_mask(40, 40, 10, 10, 30, 35);
        m.set(1, 1, true);
        m.set(2, 1, true);
        m.set(1, 2, true);
        let f = filter_components(&m, 50, Connectivity::Eight);
        assert_eq!(f, rect_mask(40, 40, 10, 10, 30, 35));
        assert_eq!(filter_components(&m, 0, Connectivity::Eight), m);
    }

    /// Independent labeling: repeated single-cell growth until fixpoint.
    fn brute_force_filter(m: &BinaryMask, alpha: usize) -> BinaryMask {
        let (w, h) = (m.width(), m.height());
        let mut out = BinaryMask::new(w, h);
        let mut done = vec![false; w * h];
        for y in 0..h {
            for x in 0..w {
                if !m.get(x, y) || done[y * w + x] {
                    continue;
                }
                let mut member = vec![false; w * h];
                member[y * w + x] = true;
                loop {
                    let mut changed = false;
                    for cy in 0..h {
                        for cx in 0..w {
                            if !m.get(cx, cy) || member[cy * w + cx] {
                                continue;
                            }
                            let touches = (-1i64..=1).any(|dy| {
                                (-1i64..=1).any(|dx| {
                                    let (nx, ny) = (cx as i64 + dx, cy as i64 + dy);
                                    nx >= 0 && ny >= 0 && nx < w as i64 && ny < h as i64
                                        && member[ny as usize * w + nx as usize]
                                })
                            });
                            if touches {
                                member[cy * w + cx] = true;
                                changed = true;
                            }
                        }
                    }
                    if !changed {
                        break;
                    }
                }
                let area = member.iter().filter(|&&b| b).count();
                for i in 0..w * h {
                    if member[i] {
                        done[i] = true;
                        if area >= alpha {
                            out.cells[i] = true;
                        }
                    }
                }
            }
        }
        out
    }

    #[test]
    fn filter_matches_brute_force_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let m = BinaryMask::from_fn(24, 18, |_, _| rng.random_bool(0.35));
            let f = filter_components(&m, 10, Connectivity::Eight);
            assert_eq!(f, brute_force_filter(&m, 10));
            assert_eq!(filter_components(&f, 10, Connectivity::Eight), f);
        }
    }

    #[test]
    fn flood_fill_respects_boundary() {
        let ring = BinaryMask::from_fn(10, 10, |x, y| {
            let r = (2..8).contains(&x) && (2..8).contains(&y);
            let inner = (3..7).contains(&x) && (3..7).contains(&y);
            r && !inner
        });
        let f = flood_fill(&ring, Point::new(0.0, 0.0), true).unwrap();
        assert!(f.get(0, 0) && f.get(9, 9));
        assert!(!f.get(4, 4));
        assert_eq!(f.count_ones(), 100 - 16);
        let uniform = BinaryMask::new(6, 6);
        assert_eq!(flood_fill(&uniform, Point::new(3.0, 2.0), true).unwrap().count_ones(), 36);
        assert!(matches!(
            flood_fill(&ring, Point::new(10.0, 0.0), true),
            Err(Error::OutOfBounds { .. })
        ));
    }

    #[test]
    fn flood_fill_matches_bfs_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let m = BinaryMask::from_fn(30, 20, |_, _| rng.random_bool(0.3));
            let (sx, sy) = (rng.random_range(0..30), rng.random_range(0..20));
            let f = flood_fill(&m, Point::new(sx as f64 + 0.5, sy as f64 + 0.5), !m.get(sx, sy)).unwrap();
            // Oracle: iterative relaxation over 4-neighbours.
            let target = m.get(sx, sy);
            let mut reach = vec![false; 600];
            reach[sy * 30 + sx] = true;
            let mut changed = true;
            while changed {
                changed = false;
                for y in 0..20 {
                    for x in 0..30 {
                        if reach[y * 30 + x] || m.get(x, y) != target {
                            continue;
                        }
                        let n = [(x.wrapping_sub(1), y), (x + 1, y), (x, y.wrapping_sub(1)), (x, y + 1)];
                        if n.iter().any(|&(a, b)| a < 30 && b < 20 && reach[b * 30 + a]) {
                            reach[y * 30 + x] = true;
                            changed = true;
                        }
                    }
                }
            }
            for y in 0..20 {
                for x in 0..30 {
                    let expect = if reach[y * 30 + x] { !target } else { m.get(x, y) };
                    assert_eq!(f.get(x, y), expect);
                }
            }
        }
    }

    fn brute_window(m: &BinaryMask, r: i64, all: bool) -> BinaryMask {
        BinaryMask::from_fn(m.width(), m.height(), |x, y| {
            let mut any = false;
            let mut every = true;
            for dy in -r..=r {
                for dx in -r..=r {
                    let v = m.get_signed(x as i64 + dx, y as i64 + dy);
                    any |= v;
                    every &= v;
                }
            }
            if all { every } else { any }
        })
    }

    #[test]
    fn morphology_matches_brute_force() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let (w, h) = (rng.random_range(1..30), rng.random_range(1..30));
            let p = rng.random_range(0.3..0.95);
            let m = BinaryMask::from_fn(w, h, |_, _| rng.random_bool(p));
            for r in 0..3 {
                assert_eq!(erode(&m, r), brute_window(&m, r as i64, true));
                assert_eq!(dilate(&m, r), brute_window(&m, r as i64, false));
            }
        }
        // Opening keeps a wide rectangle and drops a thin corridor attached to it.
        let m = BinaryMask::from_fn(30, 20, |x, y| (2..14).contains(&x) && (2..14).contains(&y) || (14..28).contains(&x) && (7..9).contains(&y));
        let o = open(&m, 2);
        assert_eq!(o, BinaryMask::from_fn(30, 20, |x, y| (2..14).contains(&x) && (2..14).contains(&y)));
    }

    #[test]
    fn crop_cases() {
        let m = rect_mask(100, 100, 20, 20, 31, 31);
        assert_eq!(crop_to_content(&m, 0).unwrap(), BinaryMask::from_fn(11, 11, |_, _| true));
        let edge = rect_mask(50, 40, 0, 0, 3, 40);
        let (c, origin) = crop_with_origin(&edge, 5).unwrap();
        assert_eq!((c.width(), c.height(), origin), (8, 40, (0, 0)));
        assert!(crop_to_content(&BinaryMask::new(4, 4), 1).is_err());
    }

    #[test]
    fn resize_cases() {
        let m = rect_mask(200, 200, 13, 40, 170, 90);
        assert_eq!(resize_nn(&m, 200, 200), m);
        let checker = BinaryMask::from_fn(2, 2, |x, y| (x + y) % 2 == 0);
        let big = resize_nn(&checker, 4, 4);
        assert_eq!(big, BinaryMask::from_fn(4, 4, |x, y| (x / 2 + y / 2) % 2 == 0));
    }

    #[test]
    fn resize_roundtrip_area_drift() {
        let poly = Polygon::new(vec![
            Point::new(10.0, 12.0),
            Point::new(140.0, 30.0),
            Point::new(120.0, 150.0),
            Point::new(30.0, 110.0),
        ])
        .unwrap();
        let m = rasterize_polygon(&poly, 160, 170);
        let rt = resize_nn(&resize_nn(&resize_nn(&m, 80, 60), 160, 170), 80, 60);
        let base = resize_nn(&m, 80, 60).count_ones() as f64;
        let scale = (80.0 * 60.0) / (160.0 * 170.0);
        let ratio_a = m.count_ones() as f64 * scale;
        assert!((rt.count_ones() as f64 - base).abs() / base < 0.05);
        assert!((base - ratio_a).abs() / ratio_a < 0.05);
    }

    #[test]
    fn iou_cases() {
        let a = rect_mask(30, 30, 0, 0, 10, 10);
        assert_eq!(mask_iou(&a, &a).unwrap().iou, 1.0);
        let d = rect_mask(30, 30, 20, 20, 30, 30);
        assert_eq!(mask_iou(&a, &d).unwrap().iou, 0.0);
        let shifted = rect_mask(30, 30, 5, 0, 15, 10);
        let s = mask_iou(&a, &shifted).unwrap();
        assert_eq!((s.intersection, s.union), (50, 150));
        assert!((s.iou - 1.0 / 3.0).abs() < 1e-15);
        let e = BinaryMask::new(30, 30);
        let z = mask_iou(&e, &e).unwrap();
        assert!(z.is_degenerate() && z.iou == 0.0);
        assert!(mask_iou(&a, &BinaryMask::new(3, 3)).is_err());
    }

    fn asymmetric_fixture() -> BinaryMask {
        BinaryMask::from_fn(7, 5, |x, y| (x < 5 && y == 0) || (x == 0 && y < 4) || (x == 3 && y == 2))
    }

    #[test]
    fn d4_transforms_are_distinct_and_compose() {
        let m = asymmetric_fixture();
        let images: Vec<BinaryMask> = D4::ALL.iter().map(|&g| apply_d4(&m, g)).collect();
        for i in 0..8 {
            for j in (i + 1)..8 {
                assert_ne!(images[i], images[j], "{} vs {}", D4::ALL[i], D4::ALL[j]);
            }
        }
        let r90 = D4::new(Rotation::R90, Flip::None);
        assert_eq!(apply_d4(&apply_d4(&m, r90), r90), apply_d4(&m, D4::new(Rotation::R180, Flip::None)));
        assert_eq!(apply_d4(&m, D4::IDENTITY), m);
        let f = D4::new(Rotation::R0, Flip::Horizontal);
        assert_eq!(apply_d4(&apply_d4(&m, f), f), m);
        // Cayley table: applying b then a equals applying a∘b.
        for a in D4::ALL {
            for b in D4::ALL {
                assert_eq!(apply_d4(&apply_d4(&m, b), a), apply_d4(&m, a.compose(b)));
            }
        }
    }

    #[test]
    fn packed_iou_matches_plain() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10 {
            let a = BinaryMask::from_fn(37, 29, |_, _| rng.random_bool(0.4));
            let b = BinaryMask::from_fn(37, 29, |_, _| rng.random_bool(0.6));
            assert_eq!(PackedMask::from(&a).iou(&PackedMask::from(&b)).unwrap(), mask_iou(&a, &b).unwrap());
        }
    }

    #[test]
    fn adjacent_rectangles_tile_exactly() {
        let mut m = BinaryMask::new(20, 20);
        let a = Polygon::rect(2.0, 2.0, 9.5, 15.0).unwrap();
        let b = Polygon::rect(9.5, 2.0, 18.0, 15.0).unwrap();
        let ra = rasterize_polygon(&a, 20, 20);
        let rb = rasterize_polygon(&b, 20, 20);
        assert_eq!(mask_iou(&ra, &rb).unwrap().intersection, 0);
        fill_polygon(&mut m, &a, true);
        fill_polygon(&mut m, &b, true);
        assert_eq!(m, rasterize_polygon(&Polygon::rect(2.0, 2.0, 18.0, 15.0).unwrap(), 20, 20));
    }

    #[test]
    fn rasterized_polygon_boundary_area_agrees_with_count() {
        let poly = Polygon::new(vec![
            Point::new(20.0, 15.0),
            Point::new(180.0, 40.0),
            Point::new(150.0, 120.0),
            Point::new(190.0, 185.0),
            Point::new(30.0, 170.0),
            Point::new(60.0, 100.0),
        ])
        .unwrap();
        let m = rasterize_polygon(&poly, 210, 210);
        let loops = trace_contours(&m);
        assert_eq!(loops.len(), 1);
        let simplified = simplify_contour(&loops[0], 1.0).unwrap();
        let area = shoelace_area(simplified.vertices()).unwrap();
        let count = m.count_ones() as f64;
        assert!((area - count).abs() / count < 0.02, "{area} vs {count}");
    }

    proptest! {
        #[test]
        fn iou_symmetric_and_d4_invariant(seed in 0u64..1000) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let a = BinaryMask::from_fn(13, 9, |_, _| rng.random_bool(0.5));
            let b = BinaryMask::from_fn(13, 9, |_, _| rng.random_bool(0.5));
            let ab = mask_iou(&a, &b).unwrap();
            prop_assert_eq!(ab, mask_iou(&b, &a).unwrap());
            if !a.is_empty() {
                prop_assert_eq!(mask_iou(&a, &a).unwrap().iou, 1.0);
            }
            for g in D4::ALL {
                prop_assert_eq!(mask_iou(&apply_d4(&a, g), &apply_d4(&b, g)).unwrap(), ab);
            }
        }

        #[test]
        fn crop_is_idempotent(seed in 0u64..1000) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let m = BinaryMask::from_fn(25, 17, |_, _| rng.random_bool(0.05));
            prop_assume!(!m.is_empty());
            let c = crop_to_content(&m, 0).unwrap();
            prop_assert_eq!(crop_to_content(&c, 0).unwrap(), c);
        }
    }
}
