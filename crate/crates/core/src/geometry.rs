//! Polygon geometry: shoelace area, contour simplification, boundary tracing
//! on binary masks, corner extraction and axis-aligned extents.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::BinaryMask;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<(f64, f64)> for Point {
    fn from((x, y): (f64, f64)) -> Self {
        Point::new(x, y)
    }
}

/// Closed polygon; the last vertex connects back to the first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Point>", into = "Vec<Point>")]
pub struct Polygon {
    vertices: Vec<Point>,
}

impl TryFrom<Vec<Point>> for Polygon {
    type Error = Error;

    fn try_from(v: Vec<Point>) -> Result<Self> {
        Polygon::new(v)
    }
}

impl From<Polygon> for Vec<Point> {
    fn from(p: Polygon) -> Self {
        p.vertices
    }
}

impl Polygon {
    /// Validates vertex count, finiteness and that no two consecutive vertices coincide.
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::InvalidPolygon(format!(
                "need at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        if let Some(p) = vertices.iter().find(|p| !p.is_finite()) {
            return Err(Error::InvalidPolygon(format!("non-finite vertex {p:?}")));
        }
        let n = vertices.len();
        for i in 0..n {
            if vertices[i] == vertices[(i + 1) % n] {
                return Err(Error::InvalidPolygon(format!(
                    "consecutive duplicate vertex at index {i}"
                )));
            }
        }
        Ok(Polygon { vertices })
    }

    /// Axis-aligned rectangle with corners `(x0, y0)` and `(x1, y1)`.
    pub fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        Polygon::new(vec![
            Point::new(x0, y0),
            Point::new(x1, y0),
            Point::new(x1, y1),
            Point::new(x0, y1),
        ])
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Applies `f` to every vertex. Fails if the result collapses consecutive vertices.
    pub fn map(&self, f: impl Fn(Point) -> Point) -> Result<Polygon> {
        Polygon::new(self.vertices.iter().map(|&p| f(p)).collect())
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices).abs()
    }

    /// True when no two non-adjacent edges touch and no adjacent edges fold back.
    pub fn is_simple(&self) -> bool {
        let edges: Vec<_> = self.edges().collect();
        let n = edges.len();
        for i in 0..n {
            for j in (i + 1)..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                let (a, b) = edges[i];
                let (c, d) = edges[j];
                if adjacent {
                    // Shared vertex is fine; overlapping collinear back-tracking is not.
                    let shared = if j == i + 1 { b } else { a };
                    let (p, q) = if j == i + 1 { (a, d) } else { (b, c) };
                    let u = (p.x - shared.x, p.y - shared.y);
                    let v = (q.x - shared.x, q.y - shared.y);
                    let cross = u.0 * v.1 - u.1 * v.0;
                    let dot = u.0 * v.0 + u.1 * v.1;
                    if cross.abs() <= 1e-12 * (1.0 + dot.abs()) && dot > 0.0 {
                        return false;
                    }
                } else if segments_intersect(a, b, c, d) {
                    return false;
                }
            }
        }
        true
    }

    /// Even-odd point containment.
    pub fn contains(&self, p: Point) -> bool {
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
                if p.x < x {
                    inside = !inside;
                }
            }
        }
        inside
    }
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn on_segment(a: Point, b: Point, p: Point) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

/// Signed shoelace sum. Positive for loops traced clockwise on screen
/// (y downward), which is the orientation `trace_contours` gives outer boundaries.
pub fn signed_area(points: &[Point]) -> f64 {
    let n = points.len();
    let mut twice = 0.0;
    for i in 0..n {
        let p = points[i];
        let q = points[(i + 1) % n];
        twice += p.x * q.y - q.x * p.y;
    }
    twice / 2.0
}

/// Shoelace (Gauss) area of a closed vertex loop.
pub fn shoelace_area(points: &[Point]) -> Result<f64> {
    if points.len() < 3 {
        return Err(Error::InvalidPolygon(format!(
            "need at least 3 vertices, got {}",
            points.len()
        )));
    }
    Ok(signed_area(points).abs())
}

pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0);
    p.distance(Point::new(a.x + t * dx, a.y + t * dy))
}

/// Distance from `p` to the boundary of `poly`.
pub fn point_polygon_distance(p: Point, poly: &Polygon) -> f64 {
    poly.edges()
        .map(|(a, b)| point_segment_distance(p, a, b))
        .fold(f64::INFINITY, f64::min)
}

/// Split-at-max-deviation simplification of an open chain. Returns the kept
/// indices, always including both endpoints.
fn simplify_chain(chain: &[Point], tolerance: f64) -> Vec<usize> {
    let last = chain.len() - 1;
    let mut keep = vec![false; chain.len()];
    keep[0] = true;
    keep[last] = true;
    let mut stack = vec![(0usize, last)];
    while let Some((s, e)) = stack.pop() {
        if e <= s + 1 {
            continue;
        }
        let (mut best, mut best_d) = (s, -1.0);
        for i in (s + 1)..e {
            let d = point_segment_distance(chain[i], chain[s], chain[e]);
            if d > best_d {
                best_d = d;
                best = i;
            }
        }
        if best_d > tolerance {
            keep[best] = true;
            stack.push((s, best));
            stack.push((best, e));
        }
    }
    keep.iter()
        .enumerate()
        .filter_map(|(i, &k)| k.then_some(i))
        .collect()
}

fn farthest_from(points: &[Point], origin: Point) -> usize {
    let mut best = (0usize, -1.0);
    for (i, p) in points.iter().enumerate() {
        let d = p.distance(origin);
        if d > best.1 {
            best = (i, d);
        }
    }
    best.0
}

/// Simplifies a closed boundary trace. Every dropped point lies within
/// `tolerance` of the returned polygon, whose vertices are an in-order
/// subsequence of the input (up to a cyclic shift).
pub fn simplify_contour(points: &[Point], tolerance: f64) -> Result<Polygon> {
    let mut ring: Vec<Point> = Vec::with_capacity(points.len());
    for &p in points {
        if ring.last() != Some(&p) {
            ring.push(p);
        }
    }
    while ring.len() > 1 && ring.first() == ring.last() {
        ring.pop();
    }
    if ring.len() < 3 {
        return Err(Error::InvalidPolygon(format!(
            "contour has {} distinct points",
            ring.len()
        )));
    }

    // Anchor on two extreme points: a point farthest from the centroid is a
    // strict corner of the convex hull, so it is never a collinear midpoint.
    let n = ring.len() as f64;
    let centroid = Point::new(
        ring.iter().map(|p| p.x).sum::<f64>() / n,
        ring.iter().map(|p| p.y).sum::<f64>() / n,
    );
    let a = farthest_from(&ring, centroid);
    ring.rotate_left(a);
    let b = farthest_from(&ring, ring[0]);

    let mut out = Vec::new();
    for i in simplify_chain(&ring[..=b], tolerance) {
        out.push(ring[i]);
    }
    out.pop();
    let mut tail: Vec<Point> = ring[b..].to_vec();
    tail.push(ring[0]);
    for i in simplify_chain(&tail, tolerance) {
        out.push(tail[i]);
    }
    out.pop();

    if out.len() < 3 {
        return Err(Error::InvalidPolygon(
            "contour degenerates to a segment".into(),
        ));
    }
    Polygon::new(out)
}

// Lattice directions in image coordinates.
const EAST: u8 = 0;
const SOUTH: u8 = 1;
const WEST: u8 = 2;
const NORTH: u8 = 3;

fn step(v: (i64, i64), dir: u8) -> (i64, i64) {
    match dir {
        EAST => (v.0 + 1, v.1),
        SOUTH => (v.0, v.1 + 1),
        WEST => (v.0 - 1, v.1),
        _ => (v.0, v.1 - 1),
    }
}

/// Traces every boundary of the occupied cells along cell edges.
///
/// Outer boundaries come back with positive `signed_area`, holes with
/// negative, so the signed areas of all loops sum to the occupied cell count.
/// Diagonally touching cells are joined (8-connected foreground). Only
/// direction-change vertices are returned.
pub fn trace_contours(mask: &BinaryMask) -> Vec<Vec<Point>> {
    let (w, h) = (mask.width() as i64, mask.height() as i64);
    let occ = |x: i64, y: i64| x >= 0 && y >= 0 && x < w && y < h && mask.get(x as usize, y as usize);

    let mut outgoing: HashMap<(i64, i64), Vec<u8>> = HashMap::new();
    let mut starts = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if !occ(x, y) {
                continue;
            }
            let sides = [
                (!occ(x, y - 1), (x, y), EAST),
                (!occ(x + 1, y), (x + 1, y), SOUTH),
                (!occ(x, y + 1), (x + 1, y + 1), WEST),
                (!occ(x - 1, y), (x, y + 1), NORTH),
            ];
            for (exposed, v, dir) in sides {
                if exposed {
                    outgoing.entry(v).or_default().push(dir);
                    starts.push((v, dir));
                }
            }
        }
    }

    let mut used: HashSet<((i64, i64), u8)> = HashSet::new();
    let mut loops = Vec::new();
    for &(v0, d0) in &starts {
        if used.contains(&(v0, d0)) {
            continue;
        }
        let mut lattice = Vec::new();
        let (mut v, mut d) = (v0, d0);
        loop {
            used.insert((v, d));
            lattice.push((v, d));
            let next = step(v, d);
            let options = &outgoing[&next];
            let nd = if options.len() == 1 {
                options[0]
            } else {
                // Pinch vertex: turn left to stay on the same 8-connected component.
                let left = (d + 3) % 4;
                *options.iter().find(|&&o| o == left).unwrap_or(&options[0])
            };
            v = next;
            d = nd;
            if (v, d) == (v0, d0) {
                break;
            }
        }
        let m = lattice.len();
        let corners: Vec<Point> = (0..m)
            .filter(|&i| lattice[i].1 != lattice[(i + m - 1) % m].1)
            .map(|i| Point::new(lattice[i].0 .0 as f64, lattice[i].0 .1 as f64))
            .collect();
        loops.push(corners);
    }
    loops
}

/// Tolerance used to smooth staircase boundaries before corner detection.
const CORNER_SIMPLIFY_TOLERANCE: f64 = 1.0;
/// Minimum direction change, in degrees, for a boundary vertex to count as a corner.
const CORNER_MIN_TURN_DEG: f64 = 30.0;

/// Dominant boundary vertices of every occupied region (outer boundaries and holes).
pub fn corner_points(mask: &BinaryMask) -> Vec<Point> {
    let mut corners = Vec::new();
    for contour in trace_contours(mask) {
        let Ok(poly) = simplify_contour(&contour, CORNER_SIMPLIFY_TOLERANCE) else {
            continue;
        };
        let v = poly.vertices();
        let n = v.len();
        for i in 0..n {
            let (prev, cur, next) = (v[(i + n - 1) % n], v[i], v[(i + 1) % n]);
            let a_in = (cur.y - prev.y).atan2(cur.x - prev.x);
            let a_out = (next.y - cur.y).atan2(next.x - cur.x);
            let mut turn = (a_out - a_in).abs();
            if turn > std::f64::consts::PI {
                turn = 2.0 * std::f64::consts::PI - turn;
            }
            if turn.to_degrees() > CORNER_MIN_TURN_DEG {
                corners.push(cur);
            }
        }
    }
    corners
}

/// Axis-aligned bounds. For masks, bounds run along cell edges so that
/// `width()` equals the number of occupied columns spanned.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl Bounds {
    pub fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> f64 {
        self.max_y - self.min_y
    }

    pub fn of_points(points: &[Point]) -> Result<Bounds> {
        let first = points.first().ok_or(Error::EmptyGeometry("no points"))?;
        let mut b = Bounds {
            min_x: first.x,
            min_y: first.y,
            max_x: first.x,
            max_y: first.y,
        };
        for p in points {
            b.min_x = b.min_x.min(p.x);
            b.min_y = b.min_y.min(p.y);
            b.max_x = b.max_x.max(p.x);
            b.max_y = b.max_y.max(p.y);
        }
        Ok(b)
    }

    pub fn union(&self, other: &Bounds) -> Bounds {
        Bounds {
            min_x: self.min_x.min(other.min_x),
            min_y: self.min_y.min(other.min_y),
            max_x: self.max_x.max(other.max_x),
            max_y: self.max_y.max(other.max_y),
        }
    }
}

/// Anything with an axis-aligned extent.
pub trait Extent {
    fn bounds(&self) -> Result<Bounds>;
}

impl Extent for Polygon {
    fn bounds(&self) -> Result<Bounds> {
        Bounds::of_points(&self.vertices)
    }
}

impl Extent for [Point] {
    fn bounds(&self) -> Result<Bounds> {
        Bounds::of_points(self)
    }
}

impl Extent for BinaryMask {
    fn bounds(&self) -> Result<Bounds> {
        let r = self
            .occupied_rect()
            .ok_or(Error::EmptyGeometry("mask has no occupied cells"))?;
        Ok(Bounds {
            min_x: r.x0 as f64,
            min_y: r.y0 as f64,
            max_x: (r.x1 + 1) as f64,
            max_y: (r.y1 + 1) as f64,
        })
    }
}

/// `(width, height)` of the axis-aligned extent; both strictly positive.
pub fn bounding_box<E: Extent + ?Sized>(e: &E) -> Result<(f64, f64)> {
    let b = e.bounds()?;
    if b.width() <= 0.0 || b.height() <= 0.0 {
        return Err(Error::EmptyGeometry("extent has zero width or height"));
    }
    Ok((b.width(), b.height()))
}
