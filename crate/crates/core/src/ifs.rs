//! IFS container, its JSON form, point sets and the Hutchinson operator.

use std::collections::HashSet;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{AffineMap, Point};

/// Largest contraction ratio accepted inside a system.
pub const MAX_RATIO: f64 = 1.0 - 1e-9;

/// Below this many points the Hutchinson operator stays sequential.
const PAR_THRESHOLD: usize = 1 << 14;

/// Names accepted by [`IfsSystem::builtin`].
pub const BUILTIN_NAMES: [&str; 3] = ["cantor", "sierpinski", "paper-example"];

/// Validated list of affine contractions with their ratios and fixed points.
#[derive(Clone, Debug)]
pub struct IfsSystem {
    maps: Vec<AffineMap>,
    ratios: Vec<f64>,
    fixed_points: Vec<Point>,
}

impl IfsSystem {
    pub fn new(maps: Vec<AffineMap>) -> Result<Self> {
        if maps.is_empty() {
            return Err(Error::EmptySystem);
        }
        let mut ratios = Vec::with_capacity(maps.len());
        let mut fixed_points = Vec::with_capacity(maps.len());
        for (index, m) in maps.iter().enumerate() {
            if !m.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "map {index} has a non-finite coefficient"
                )));
            }
            let ratio = m.contraction_ratio();
            if !(ratio <= MAX_RATIO) {
                return Err(Error::NotAContraction { index, ratio });
            }
            ratios.push(ratio);
            fixed_points.push(m.fixed_point()?);
        }
        Ok(Self {
            maps,
            ratios,
            fixed_points,
        })
    }

    pub fn builtin(name: &str) -> Result<Self> {
        let third = 1.0 / 3.0;
        let maps = match name {
            "cantor" => vec![
                AffineMap::new(third, 0.0, 0.0, third, 0.0, 0.0),
                AffineMap::new(third, 0.0, 0.0, third, 2.0 / 3.0, 0.0),
            ],
            "sierpinski" => sierpinski_vertices()
                .iter()
                .map(|&v| AffineMap::homothety(v, 0.5))
                .collect(),
            "paper-example" => vec![
                AffineMap::rotation_similitude(Point::ORIGIN, PI / 6.0, 0.5)?,
                AffineMap::rotation_similitude(Point::new(1.0, 0.0), -PI / 6.0, 0.6)?,
            ],
            other => return Err(Error::UnknownName(other.to_string())),
        };
        Self::new(maps)
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    pub fn maps(&self) -> &[AffineMap] {
        &self.maps
    }

    pub fn ratios(&self) -> &[f64] {
        &self.ratios
    }

    pub fn fixed_points(&self) -> &[Point] {
        &self.fixed_points
    }

    /// Largest contraction ratio, the Lipschitz constant of the Hutchinson
    /// operator in the Hausdorff metric.
    pub fn lambda_max(&self) -> f64 {
        self.ratios.iter().copied().fold(0.0, f64::max)
    }

    /// `f₁(b) ‖ f₂(b) ‖ … ‖ f_N(b)`, in map order, without deduplication.
    pub fn hutchinson(&self, b: &PointSet) -> Result<PointSet> {
        if b.is_empty() {
            return Err(Error::EmptyInput);
        }
        let mut out = Vec::with_capacity(self.maps.len() * b.len());
        for m in &self.maps {
            if b.len() >= PAR_THRESHOLD {
                out.par_extend(b.points.par_iter().map(|&p| m.apply(p)));
            } else {
                out.extend(b.points.iter().map(|&p| m.apply(p)));
            }
        }
        Ok(PointSet::new(out))
    }

    pub fn parse(text: &[u8]) -> Result<Self> {
        let text = std::str::from_utf8(text).map_err(|e| Error::Parse(e.to_string()))?;
        let doc: IfsDocument = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if doc.maps.is_empty() {
            return Err(Error::EmptySystem);
        }
        let maps = doc
            .maps
            .into_iter()
            .enumerate()
            .map(|(index, def)| def.into_map(index))
            .collect::<Result<Vec<_>>>()?;
        Self::new(maps)
    }

    /// Affine-form JSON document; similitudes appear expanded.
    pub fn serialize(&self) -> Vec<u8> {
        let doc = IfsDocument {
            maps: self
                .maps
                .iter()
                .map(|m| MapDef::Affine {
                    a: m.a,
                    b: m.b,
                    c: m.c,
                    d: m.d,
                    e: m.e,
                    f: m.f,
                })
                .collect(),
        };
        let mut out = serde_json::to_vec_pretty(&doc).expect("IFS document always serializes");
        out.push(b'\n');
        out
    }
}

/// Vertices of the unit equilateral triangle used by the Sierpinski gallery
/// entry: `(0,0)`, `(1,0)`, `(1/2, √3/2)`.
pub fn sierpinski_vertices() -> [Point; 3] {
    [
        Point::new(0.0, 0.0),
        Point::new(1.0, 0.0),
        Point::new(0.5, 3f64.sqrt() / 2.0),
    ]
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct IfsDocument {
    maps: Vec<MapDef>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum MapDef {
    Affine {
        a: f64,
        b: f64,
        c: f64,
        d: f64,
        e: f64,
        f: f64,
    },
    Similitude {
        center: [f64; 2],
        angle_rad: f64,
        ratio: f64,
    },
}

impl MapDef {
    fn into_map(self, index: usize) -> Result<AffineMap> {
        match self {
            MapDef::Affine { a, b, c, d, e, f } => Ok(AffineMap::new(a, b, c, d, e, f)),
            MapDef::Similitude {
                center,
                angle_rad,
                ratio,
            } => {
                if ratio >= 1.0 {
                    return Err(Error::NotAContraction { index, ratio });
                }
                AffineMap::rotation_similitude(Point::new(center[0], center[1]), angle_rad, ratio)
                    .map_err(|e| Error::Parse(format!("map {index}: {e}")))
            }
        }
    }
}

/// Finite list of plane points, duplicates allowed.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PointSet {
    points: Vec<Point>,
}

impl PointSet {
    pub fn new(points: Vec<Point>) -> Self {
        Self { points }
    }

    pub fn singleton(p: Point) -> Self {
        Self { points: vec![p] }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Point> {
        self.points.iter()
    }

    pub fn into_points(self) -> Vec<Point> {
        self.points
    }

    /// Keeps the first point of every occupied square cell of side `cell`
    /// (cells anchored at the origin). Every dropped point lies within one
    /// cell diagonal of a kept point.
    pub fn dedup_quantized(&self, cell: f64) -> PointSet {
        assert!(cell > 0.0 && cell.is_finite(), "dedup cell must be positive");
        let mut seen = HashSet::with_capacity(self.points.len());
        let points = self
            .points
            .iter()
            .copied()
            .filter(|p| seen.insert(((p.x / cell).floor() as i64, (p.y / cell).floor() as i64)))
            .collect();
        PointSet { points }
    }
}

impl From<Vec<Point>> for PointSet {
    fn from(points: Vec<Point>) -> Self {
        Self::new(points)
    }
}

impl FromIterator<Point> for PointSet {
    fn from_iter<I: IntoIterator<Item = Point>>(iter: I) -> Self {
        Self::new(iter.into_iter().collect())
    }
}

impl<'a> IntoIterator for &'a PointSet {
    type Item = &'a Point;
    type IntoIter = std::slice::Iter<'a, Point>;

    fn into_iter(self) -> Self::IntoIter {
        self.points.iter()
    }
}
