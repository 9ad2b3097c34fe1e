//! Axis-aligned occupancy grids.
//!
//! Cell `(i, j)` covers `[x0 + i·c, x0 + (i+1)·c) × [y0 + j·c, y0 + (j+1)·c)`
//! with row 0 at the smallest `y`. Membership is always sampled at cell
//! centres, which is the only source of discretisation error here.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{Point, Rect};
use crate::ifs::PointSet;

#[derive(Clone, Debug, PartialEq, Eq)]
struct BitGrid {
    words: Vec<u64>,
}

impl BitGrid {
    fn new(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(64)],
        }
    }

    fn from_bools(bits: &[bool]) -> Self {
        let mut g = Self::new(bits.len());
        for (k, &b) in bits.iter().enumerate() {
            if b {
                g.set(k);
            }
        }
        g
    }

    #[inline]
    fn get(&self, k: usize) -> bool {
        self.words[k / 64] >> (k % 64) & 1 == 1
    }

    #[inline]
    fn set(&mut self, k: usize) {
        self.words[k / 64] |= 1 << (k % 64);
    }

    fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Raster {
    origin: Point,
    cell_size: f64,
    width: usize,
    height: usize,
    bits: BitGrid,
}

impl Raster {
    /// An empty grid.
    pub fn new(origin: Point, cell_size: f64, width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument("raster must have at least one cell".into()));
        }
        if !(cell_size > 0.0 && cell_size.is_finite()) || !origin.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "cell size {cell_size} must be finite and positive"
            )));
        }
        Ok(Self {
            origin,
            cell_size,
            width,
            height,
            bits: BitGrid::new(width * height),
        })
    }

    /// Grid with the same geometry as `self` and occupancy given row-major.
    pub fn with_cells(&self, cells: &[bool]) -> Raster {
        assert_eq!(cells.len(), self.width * self.height, "cell count mismatch");
        Raster {
            bits: BitGrid::from_bools(cells),
            ..self.clone()
        }
    }

    pub fn origin(&self) -> Point {
        self.origin
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits.get(j * self.width + i)
    }

    pub fn set(&mut self, i: usize, j: usize, marked: bool) {
        let k = j * self.width + i;
        if marked {
            self.bits.set(k);
        } else {
            self.bits.words[k / 64] &= !(1 << (k % 64));
        }
    }

    pub fn marked_count(&self) -> usize {
        self.bits.count()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.words.iter().all(|&w| w == 0)
    }

    #[inline]
    pub fn cell_center(&self, i: usize, j: usize) -> Point {
        Point::new(
            self.origin.x + (i as f64 + 0.5) * self.cell_size,
            self.origin.y + (j as f64 + 0.5) * self.cell_size,
        )
    }

    /// Index of the cell containing `p`, if it lies on the grid.
    #[inline]
    pub fn cell_of(&self, p: Point) -> Option<(usize, usize)> {
        let fi = ((p.x - self.origin.x) / self.cell_size).floor();
        let fj = ((p.y - self.origin.y) / self.cell_size).floor();
        if fi >= 0.0 && fj >= 0.0 && fi < self.width as f64 && fj < self.height as f64 {
            Some((fi as usize, fj as usize))
        } else {
            None
        }
    }

    pub fn same_grid(&self, other: &Raster) -> bool {
        self.origin == other.origin
            && self.cell_size == other.cell_size
            && self.width == other.width
            && self.height == other.height
    }

    /// Marked cells as `(i, j)`, row-major.
    pub fn marked_cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.height).flat_map(move |j| {
            (0..self.width).filter_map(move |i| self.get(i, j).then_some((i, j)))
        })
    }

    /// Builds a raster of the same geometry whose cell `(i, j)` is marked iff
    /// `f(center)` holds; evaluated in parallel over rows.
    pub fn from_fn<F>(&self, f: F) -> Raster
    where
        F: Fn(Point) -> bool + Sync,
    {
        let rows: Vec<Vec<bool>> = (0..self.height)
            .into_par_iter()
            .map(|j| (0..self.width).map(|i| f(self.cell_center(i, j))).collect())
            .collect();
        let flat: Vec<bool> = rows.into_iter().flatten().collect();
        self.with_cells(&flat)
    }

    /// Chebyshev dilation by `radius` cells.
    pub fn dilate(&self, radius: usize) -> Raster {
        if radius == 0 {
            return self.clone();
        }
        let (w, h) = (self.width, self.height);
        // separable: rows first, then columns
        let mut rows = vec![false; w * h];
        for j in 0..h {
            for i in 0..w {
                if self.get(i, j) {
                    let lo = i.saturating_sub(radius);
                    let hi = (i + radius).min(w - 1);
                    rows[j * w + lo..=j * w + hi].fill(true);
                }
            }
        }
        let mut out = vec![false; w * h];
        for j in 0..h {
            for i in 0..w {
                if rows[j * w + i] {
                    let lo = j.saturating_sub(radius);
                    let hi = (j + radius).min(h - 1);
                    for jj in lo..=hi {
                        out[jj * w + i] = true;
                    }
                }
            }
        }
        self.with_cells(&out)
    }
}

/// Square cells of side `max(width, height)/resolution` covering `bbox`,
/// marked where `membership` holds at the cell centre.
pub fn rasterize_region<F>(membership: F, bbox: Rect, resolution: usize) -> Result<Raster>
where
    F: Fn(Point) -> bool + Sync,
{
    if resolution < 2 {
        return Err(Error::InvalidArgument("resolution must be at least 2".into()));
    }
    let (w, h) = (bbox.width(), bbox.height());
    if !(w > 0.0 || h > 0.0) || !w.is_finite() || !h.is_finite() {
        return Err(Error::InvalidArgument("bounding box is degenerate".into()));
    }
    let cell = w.max(h) / resolution as f64;
    let cells_along = |extent: f64| {
        if extent >= w.max(h) {
            resolution
        } else {
            // guard against w/cell landing a hair above an integer
            ((extent / cell) * (1.0 - 1e-12)).ceil().max(1.0) as usize
        }
    };
    let grid = Raster::new(bbox.min, cell, cells_along(w), cells_along(h))?;
    Ok(grid.from_fn(membership))
}

/// Centres of the marked cells, row-major.
pub fn raster_points(r: &Raster) -> Result<PointSet> {
    if r.is_empty() {
        return Err(Error::EmptyRaster);
    }
    Ok(r.marked_cells().map(|(i, j)| r.cell_center(i, j)).collect())
}

/// Whether every marked cell of `a` is within Chebyshev distance `tol_cells`
/// of a marked cell of `b`.
pub fn raster_subset(a: &Raster, b: &Raster, tol_cells: usize) -> Result<bool> {
    if !a.same_grid(b) {
        return Err(Error::GridMismatch);
    }
    let grown = b.dilate(tol_cells);
    Ok(a
        .bits
        .words
        .iter()
        .zip(&grown.bits.words)
        .all(|(x, y)| x & !y == 0))
}
