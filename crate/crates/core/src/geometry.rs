//! Plane points and affine maps.
//!
//! Everything here is plain `Copy` data. The contraction ratio of an affine
//! map is its Lipschitz constant for the Euclidean metric, i.e. the largest
//! singular value of the linear part.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Determinant magnitude below which a 2x2 system is treated as singular.
pub const SINGULAR_EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Squared Euclidean distance. All distance comparisons go through this
    /// so that the brute-force and bucketed Hausdorff paths agree bit for bit.
    #[inline]
    pub fn distance_sq(self, other: Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    #[inline]
    pub fn distance(self, other: Point) -> f64 {
        self.distance_sq(other).sqrt()
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.distance(Point::ORIGIN)
    }

    #[inline]
    pub fn scale(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

impl From<(f64, f64)> for Point {
    fn from((x, y): (f64, f64)) -> Self {
        Point::new(x, y)
    }
}

/// Closed axis-aligned rectangle `[min.x, max.x] x [min.y, max.y]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub min: Point,
    pub max: Point,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self {
            min: Point::new(x0.min(x1), y0.min(y1)),
            max: Point::new(x0.max(x1), y0.max(y1)),
        }
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    /// Intersection of two rectangles; `None` when they are disjoint.
    pub fn intersect(&self, other: &Rect) -> Option<Rect> {
        let min = Point::new(self.min.x.max(other.min.x), self.min.y.max(other.min.y));
        let max = Point::new(self.max.x.min(other.max.x), self.max.y.min(other.max.y));
        (min.x <= max.x && min.y <= max.y).then_some(Rect { min, max })
    }
}

/// Affine map of the plane, `x' = a*x + b*y + e`, `y' = c*x + d*y + f`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AffineMap {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub f: f64,
}

impl AffineMap {
    pub const IDENTITY: AffineMap = AffineMap::new(1.0, 0.0, 0.0, 1.0, 0.0, 0.0);

    pub const fn new(a: f64, b: f64, c: f64, d: f64, e: f64, f: f64) -> Self {
        Self { a, b, c, d, e, f }
    }

    /// `ratio * R(angle) * (x - center) + center`, counterclockwise for
    /// positive angles.
    pub fn rotation_similitude(center: Point, angle_rad: f64, ratio: f64) -> Result<Self> {
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::InvalidRatio(ratio));
        }
        if !angle_rad.is_finite() || !center.is_finite() {
            return Err(Error::InvalidArgument(
                "similitude center and angle must be finite".into(),
            ));
        }
        let (sin, cos) = angle_rad.sin_cos();
        let (a, b, c, d) = (ratio * cos, -ratio * sin, ratio * sin, ratio * cos);
        let e = center.x - (a * center.x + b * center.y);
        let f = center.y - (c * center.x + d * center.y);
        Ok(Self::new(a, b, c, d, e, f))
    }

    /// Homothety with the given ratio about `center` (no ratio validation).
    pub fn homothety(center: Point, ratio: f64) -> Self {
        Self::new(
            ratio,
            0.0,
            0.0,
            ratio,
            center.x * (1.0 - ratio),
            center.y * (1.0 - ratio),
        )
    }

    pub fn coefficients(&self) -> [f64; 6] {
        [self.a, self.b, self.c, self.d, self.e, self.f]
    }

    pub fn is_finite(&self) -> bool {
        self.coefficients().iter().all(|v| v.is_finite())
    }

    #[inline]
    pub fn apply(&self, p: Point) -> Point {
        Point::new(
            self.a * p.x + self.b * p.y + self.e,
            self.c * p.x + self.d * p.y + self.f,
        )
    }

    #[inline]
    pub fn determinant(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    /// Largest singular value of the linear part.
    ///
    /// The Gram matrix `AᵀA` has trace `t = a²+b²+c²+d²` and determinant
    /// `det(A)²`; its larger eigenvalue is `(t + sqrt(t² - 4 det(A)²)) / 2`.
    /// The discriminant is evaluated in the factored form
    /// `((a-d)² + (b+c)²)((a+d)² + (c-b)²)`, which is never negative.
    pub fn contraction_ratio(&self) -> f64 {
        let (a, b, c, d) = (self.a, self.b, self.c, self.d);
        let trace = a * a + b * b + c * c + d * d;
        let p = (a - d) * (a - d) + (b + c) * (b + c);
        let q = (a + d) * (a + d) + (c - b) * (c - b);
        let top = 0.5 * (trace + (p * q).sqrt());
        top.sqrt()
    }

    /// Unique solution of `(I - A) p = (e, f)`.
    pub fn fixed_point(&self) -> Result<Point> {
        let (m00, m01, m10, m11) = (1.0 - self.a, -self.b, -self.c, 1.0 - self.d);
        let det = m00 * m11 - m01 * m10;
        if !(det.abs() >= SINGULAR_EPS) {
            return Err(Error::SingularSystem { det });
        }
        Ok(Point::new(
            (self.e * m11 - m01 * self.f) / det,
            (m00 * self.f - m10 * self.e) / det,
        ))
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &AffineMap) -> AffineMap {
        AffineMap::new(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
            self.a * other.e + self.b * other.f + self.e,
            self.c * other.e + self.d * other.f + self.f,
        )
    }

    pub fn inverse(&self) -> Option<AffineMap> {
        let det = self.determinant();
        if !(det.abs() > SINGULAR_EPS) {
            return None;
        }
        let (a, b, c, d) = (self.d / det, -self.b / det, -self.c / det, self.a / det);
        Some(AffineMap::new(
            a,
            b,
            c,
            d,
            -(a * self.e + b * self.f),
            -(c * self.e + d * self.f),
        ))
    }
}
