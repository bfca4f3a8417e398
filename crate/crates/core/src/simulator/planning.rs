//! A* and Dijkstra on an 8-connected grid with optional per-cell costs.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::raster::{BinaryMask, Cell, OccupancyGrid};

const STEPS: [(i64, i64, f64); 8] = [
    (1, 0, 1.0),
    (-1, 0, 1.0),
    (0, 1, 1.0),
    (0, -1, 1.0),
    (1, 1, std::f64::consts::SQRT_2),
    (1, -1, std::f64::consts::SQRT_2),
    (-1, 1, std::f64::consts::SQRT_2),
    (-1, -1, std::f64::consts::SQRT_2),
];

/// Traversability plus a non-negative surcharge paid on entering a cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CostGrid {
    width: usize,
    height: usize,
    blocked: Vec<bool>,
    extra: Vec<f64>,
}

impl CostGrid {
    pub fn from_mask(blocked: &BinaryMask) -> CostGrid {
        CostGrid {
            width: blocked.width(),
            height: blocked.height(),
            blocked: blocked.cells().to_vec(),
            extra: vec![0.0; blocked.width() * blocked.height()],
        }
    }

    /// Occupied cells block; unknown cells block when `unknown_blocks`.
    pub fn from_grid(grid: &OccupancyGrid, unknown_blocks: bool) -> CostGrid {
        let blocked = grid.mask_of(|c| c == Cell::Occupied || (unknown_blocks && c == Cell::Unknown));
        CostGrid::from_mask(&blocked)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn is_blocked(&self, x: i64, y: i64) -> bool {
        x < 0 || y < 0 || x as usize >= self.width || y as usize >= self.height || self.blocked[y as usize * self.width + x as usize]
    }

    pub fn extra(&self, x: usize, y: usize) -> f64 {
        self.extra[y * self.width + x]
    }

    pub fn set_extra(&mut self, x: usize, y: usize, cost: f64) {
        assert!(cost >= 0.0, "surcharge must be non-negative");
        self.extra[y * self.width + x] = cost;
    }

    /// Surcharges cells near blocked ones: `costs[k]` at Chebyshev
    /// distance `k + 1`. The larger surcharge wins where rings overlap.
    pub fn inflate(&mut self, costs: &[f64]) {
        let (w, h) = (self.width as i64, self.height as i64);
        let reach = costs.len() as i64;
        let mut extra = self.extra.clone();
        for y in 0..h {
            for x in 0..w {
                if !self.blocked[(y * w + x) as usize] {
                    continue;
                }
                for ny in (y - reach).max(0)..=(y + reach).min(h - 1) {
                    for nx in (x - reach).max(0)..=(x + reach).min(w - 1) {
                        let d = (nx - x).abs().max((ny - y).abs());
                        if d == 0 {
                            continue;
                        }
                        let e = &mut extra[(ny * w + nx) as usize];
                        *e = e.max(costs[d as usize - 1]);
                    }
                }
            }
        }
        self.extra = extra;
    }

    fn neighbours(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (x, y) = ((i % self.width) as i64, (i / self.width) as i64);
        STEPS.iter().filter_map(move |&(dx, dy, len)| {
            let (nx, ny) = (x + dx, y + dy);
            if self.is_blocked(nx, ny) {
                return None;
            }
            // No squeezing diagonally past a blocked corner.
            if dx != 0 && dy != 0 && (self.is_blocked(x + dx, y) || self.is_blocked(x, y + dy)) {
                return None;
            }
            let j = ny as usize * self.width + nx as usize;
            Some((j, len + self.extra[j]))
        })
    }

    fn check(&self, c: (usize, usize)) -> Result<usize> {
        if self.is_blocked(c.0 as i64, c.1 as i64) {
            return Err(Error::InvalidEndpoint {
                x: c.0 as i64,
                y: c.1 as i64,
            });
        }
        Ok(c.1 * self.width + c.0)
    }
}

/// Priority key: non-negative floats order like their bit patterns.
fn key(f: f64) -> u64 {
    debug_assert!(f >= 0.0);
    f.to_bits()
}

/// Cheapest 8-connected path from `from` to `to`, both included. Empty when
/// the goal cannot be reached.
pub fn plan_path(grid: &CostGrid, from: (usize, usize), to: (usize, usize)) -> Result<Vec<(usize, usize)>> {
    let s = grid.check(from)?;
    let t = grid.check(to)?;
    let w = grid.width;
    let h = |i: usize| ((i % w) as f64 - to.0 as f64).hypot((i / w) as f64 - to.1 as f64);
    let n = grid.width * grid.height;
    let mut g = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    let mut closed = vec![false; n];
    let mut heap = BinaryHeap::new();
    g[s] = 0.0;
    heap.push(Reverse((key(h(s)), s)));
    while let Some(Reverse((_, i))) = heap.pop() {
        if closed[i] {
            continue;
        }
        closed[i] = true;
        if i == t {
            let mut path = vec![(i % w, i / w)];
            let mut k = i;
            while k != s {
                k = parent[k];
                path.push((k % w, k / w));
            }
            path.reverse();
            return Ok(path);
        }
        for (j, c) in grid.neighbours(i) {
            let ng = g[i] + c;
            if ng < g[j] {
                g[j] = ng;
                parent[j] = i;
                heap.push(Reverse((key(ng + h(j)), j)));
            }
        }
    }
    Ok(Vec::new())
}

/// Cost of walking a cell path under the grid's step and surcharge rules.
pub fn path_cost(grid: &CostGrid, path: &[(usize, usize)]) -> f64 {
    path.windows(2)
        .map(|p| {
            let (a, b) = (p[0], p[1]);
            let diag = a.0 != b.0 && a.1 != b.1;
            (if diag { std::f64::consts::SQRT_2 } else { 1.0 }) + grid.extra(b.0, b.1)
        })
        .sum()
}

/// Path cost from `from` to every cell; unreachable cells are infinite.
pub fn distance_field(grid: &CostGrid, from: (usize, usize)) -> Result<Vec<f64>> {
    let s = grid.check(from)?;
    let mut dist = vec![f64::INFINITY; grid.width * grid.height];
    let mut heap = BinaryHeap::new();
    dist[s] = 0.0;
    heap.push(Reverse((key(0.0), s)));
    while let Some(Reverse((k, i))) = heap.pop() {
        if k != key(dist[i]) {
            continue;
        }
        for (j, c) in grid.neighbours(i) {
            let nd = dist[i] + c;
            if nd < dist[j] {
                dist[j] = nd;
                heap.push(Reverse((key(nd), j)));
            }
        }
    }
    Ok(dist)
}
