//! File output: plain PBM for rasters, CSV for point sets, and the Maxwell
//! locus renderer.

use std::io::Write;

use crate::error::{Error, Result};
use crate::geometry::{Point, Rect};
use crate::ifs::PointSet;
use crate::raster::{rasterize_region, Raster};
use crate::region::distance_sum;

pub const PBM_COMMENT: &str = "# ifs-chisel";

/// At most 35 values per line keeps "1 0 1 …" within 70 characters.
const PBM_VALUES_PER_LINE: usize = 35;

/// Plain PBM ("P1"). Rows are written top to bottom (largest `y` first),
/// each row starting on a fresh line and wrapped at 70 characters.
pub fn write_pbm<W: Write>(r: &Raster, mut out: W) -> Result<()> {
    let mut text = String::with_capacity(32 + 2 * r.width() * r.height());
    text.push_str("P1\n");
    text.push_str(PBM_COMMENT);
    text.push('\n');
    text.push_str(&format!("{} {}\n", r.width(), r.height()));
    for j in (0..r.height()).rev() {
        for i in 0..r.width() {
            if i > 0 {
                text.push(if i % PBM_VALUES_PER_LINE == 0 { '\n' } else { ' ' });
            }
            text.push(if r.get(i, j) { '1' } else { '0' });
        }
        text.push('\n');
    }
    out.write_all(text.as_bytes())?;
    Ok(())
}

/// Reads a plain PBM back onto a grid with the given geometry.
pub fn read_pbm(text: &str, origin: Point, cell_size: f64) -> Result<Raster> {
    let mut tokens = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(str::split_whitespace);
    if tokens.next() != Some("P1") {
        return Err(Error::Parse("not a plain PBM (missing P1)".into()));
    }
    let mut dim = || -> Result<usize> {
        tokens
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::Parse("bad PBM dimensions".into()))
    };
    let (w, h) = (dim()?, dim()?);
    let mut cells = vec![false; w * h];
    let mut k = 0;
    for t in tokens {
        for ch in t.chars() {
            if k >= w * h {
                return Err(Error::Parse("too many PBM samples".into()));
            }
            let (i, row) = (k % w, k / w);
            cells[(h - 1 - row) * w + i] = match ch {
                '1' => true,
                '0' => false,
                other => return Err(Error::Parse(format!("bad PBM sample {other:?}"))),
            };
            k += 1;
        }
    }
    if k != w * h {
        return Err(Error::Parse(format!("expected {} PBM samples, got {k}", w * h)));
    }
    Ok(Raster::new(origin, cell_size, w, h)?.with_cells(&cells))
}

/// `x,y` header then one row per point; `f64` display is the shortest
/// decimal that parses back to the same value.
pub fn write_points_csv<W: Write>(p: &PointSet, mut out: W) -> Result<()> {
    let mut text = String::from("x,y\n");
    for q in p.iter() {
        text.push_str(&format!("{},{}\n", q.x, q.y));
    }
    out.write_all(text.as_bytes())?;
    Ok(())
}

/// Region and outline of a Maxwell locus on a common grid.
#[derive(Clone, Debug)]
pub struct LocusRender {
    /// Cells whose centre has distance sum at most the target.
    pub region: Raster,
    /// Cells whose membership differs from at least one 4-neighbour.
    pub boundary: Raster,
}

pub fn render_locus(foci: &[Point], sum: f64, bbox: Rect, resolution: usize) -> Result<LocusRender> {
    if foci.is_empty() {
        return Err(Error::InvalidArgument("locus needs at least one focus".into()));
    }
    if !(sum >= 0.0) {
        return Err(Error::InvalidArgument(format!("distance sum {sum} must be non-negative")));
    }
    let region = rasterize_region(|p| distance_sum(foci, p) <= sum, bbox, resolution)?;
    let boundary = boundary_of(&region);
    Ok(LocusRender { region, boundary })
}

/// 4-neighbour sign change; cells on the grid edge only compare with the
/// neighbours that exist.
pub fn boundary_of(r: &Raster) -> Raster {
    let (w, h) = (r.width(), r.height());
    let mut cells = vec![false; w * h];
    for j in 0..h {
        for i in 0..w {
            let v = r.get(i, j);
            let differs = (i > 0 && r.get(i - 1, j) != v)
                || (i + 1 < w && r.get(i + 1, j) != v)
                || (j > 0 && r.get(i, j - 1) != v)
                || (j + 1 < h && r.get(i, j + 1) != v);
            cells[j * w + i] = differs;
        }
    }
    r.with_cells(&cells)
}
