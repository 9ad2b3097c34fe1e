//! Hausdorff distance between finite point sets.
//!
//! [`hausdorff_distance_brute`] is the O(|a|·|b|) reference. The default
//! [`hausdorff_distance`] buckets the target set into a uniform grid and
//! searches rings of buckets outward; it compares the same squared distances
//! and takes a single square root at the end, so it returns exactly the same
//! value as the reference.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::ifs::PointSet;

/// Below this `|a|·|b|` the brute-force path is used directly.
const BRUTE_LIMIT: usize = 1 << 16;

pub fn hausdorff_distance(a: &PointSet, b: &PointSet) -> Result<f64> {
    check(a, b)?;
    if a.len().saturating_mul(b.len()) <= BRUTE_LIMIT {
        return hausdorff_distance_brute(a, b);
    }
    let ga = BucketGrid::new(a.points());
    let gb = BucketGrid::new(b.points());
    let ab = directed_sq(a.points(), |p| gb.nearest_sq(p));
    let ba = directed_sq(b.points(), |p| ga.nearest_sq(p));
    Ok(ab.max(ba).sqrt())
}

pub fn hausdorff_distance_brute(a: &PointSet, b: &PointSet) -> Result<f64> {
    check(a, b)?;
    let nearest = |set: &[Point], p: Point| {
        set.iter()
            .map(|q| p.distance_sq(*q))
            .fold(f64::INFINITY, f64::min)
    };
    let ab = directed_sq(a.points(), |p| nearest(b.points(), p));
    let ba = directed_sq(b.points(), |p| nearest(a.points(), p));
    Ok(ab.max(ba).sqrt())
}

/// sup over `a` of the nearest squared distance reported by `nearest`.
fn directed_sq<F>(a: &[Point], nearest: F) -> f64
where
    F: Fn(Point) -> f64 + Sync,
{
    a.par_iter()
        .map(|&p| nearest(p))
        .reduce(|| 0.0, f64::max)
}

fn check(a: &PointSet, b: &PointSet) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(())
}

/// Points bucketed into square cells, stored CSR style.
struct BucketGrid<'a> {
    points: &'a [Point],
    x0: f64,
    y0: f64,
    side: f64,
    nx: i64,
    ny: i64,
    starts: Vec<usize>,
    order: Vec<usize>,
}

impl<'a> BucketGrid<'a> {
    fn new(points: &'a [Point]) -> Self {
        let (mut x0, mut y0) = (f64::INFINITY, f64::INFINITY);
        let (mut x1, mut y1) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in points {
            x0 = x0.min(p.x);
            y0 = y0.min(p.y);
            x1 = x1.max(p.x);
            y1 = y1.max(p.y);
        }
        let (w, h) = (x1 - x0, y1 - y0);
        let n = points.len() as f64;
        // roughly one point per bucket in 2D, n buckets along a line
        let mut side = (w * h / n).sqrt().max(w.max(h) / n);
        if !(side > 0.0) || !side.is_finite() {
            side = 1.0;
        }
        let nx = ((w / side).floor() as i64 + 1).max(1);
        let ny = ((h / side).floor() as i64 + 1).max(1);

        let cells = (nx * ny) as usize;
        let mut grid = BucketGrid {
            points,
            x0,
            y0,
            side,
            nx,
            ny,
            starts: vec![0; cells + 1],
            order: vec![0; points.len()],
        };
        let keys: Vec<usize> = points.iter().map(|p| grid.key_of(*p)).collect();
        for &k in &keys {
            grid.starts[k + 1] += 1;
        }
        for i in 0..cells {
            grid.starts[i + 1] += grid.starts[i];
        }
        let mut fill = grid.starts.clone();
        for (idx, &k) in keys.iter().enumerate() {
            grid.order[fill[k]] = idx;
            fill[k] += 1;
        }
        grid
    }

    fn cell_coords(&self, p: Point) -> (i64, i64) {
        (
            ((p.x - self.x0) / self.side).floor() as i64,
            ((p.y - self.y0) / self.side).floor() as i64,
        )
    }

    fn key_of(&self, p: Point) -> usize {
        let (i, j) = self.cell_coords(p);
        let i = i.clamp(0, self.nx - 1);
        let j = j.clamp(0, self.ny - 1);
        (j * self.nx + i) as usize
    }

    fn scan_cell(&self, i: i64, j: i64, p: Point, best: &mut f64) {
        let k = (j * self.nx + i) as usize;
        for &idx in &self.order[self.starts[k]..self.starts[k + 1]] {
            let d = p.distance_sq(self.points[idx]);
            if d < *best {
                *best = d;
            }
        }
    }

    /// Squared distance from `p` to its nearest neighbour in the grid.
    fn nearest_sq(&self, p: Point) -> f64 {
        let (qi, qj) = self.cell_coords(p);
        // Chebyshev ring index of the grid rectangle as seen from (qi, qj)
        let gap = |q: i64, n: i64| {
            if q < 0 {
                -q
            } else if q >= n {
                q - n + 1
            } else {
                0
            }
        };
        let r_first = gap(qi, self.nx).max(gap(qj, self.ny));
        let r_last = (qi.max(self.nx - 1 - qi)).max(qj.max(self.ny - 1 - qj));

        let mut best = f64::INFINITY;
        for r in r_first..=r_last {
            // buckets in ring r and beyond are at least (r - 1)·side away
            let reach = (r - 1).max(0) as f64 * self.side * (1.0 - 1e-9);
            if best.is_finite() && best < reach * reach {
                break;
            }
            let j_lo = (qj - r).max(0);
            let j_hi = (qj + r).min(self.ny - 1);
            for j in j_lo..=j_hi {
                if (j - qj).abs() == r {
                    let i_lo = (qi - r).max(0);
                    let i_hi = (qi + r).min(self.nx - 1);
                    for i in i_lo..=i_hi {
                        self.scan_cell(i, j, p, &mut best);
                    }
                } else {
                    for i in [qi - r, qi + r] {
                        if (0..self.nx).contains(&i) {
                            self.scan_cell(i, j, p, &mut best);
                        }
                    }
                }
            }
        }
        best
    }
}
