//! Multi-foci (Maxwell) ellipses and the invariant region of an IFS.
//!
//! For contractions with ratios `λᵢ` and fixed points `aᵢ`, let
//! `λ = max λᵢ`, `Dᵢ = Σⱼ d(aᵢ, aⱼ)`, `D = max Dᵢ` and
//! `M = (1 + λ)/(1 − λ) · D`. The sub-level set `{x : Σⱼ d(x, aⱼ) ≤ M}` is
//! mapped into itself by every `fᵢ`, since
//! `Σⱼ d(fᵢ(x), aⱼ) ≤ λ Σⱼ d(x, aⱼ) + (λ + 1) Dᵢ ≤ λM + (λ + 1)D = M`.

use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Point, Rect};
use crate::ifs::{IfsSystem, PointSet};
use crate::rng::SplitMix64;

/// Consecutive rejections after which sampling gives up.
pub const MAX_REJECTIONS: u64 = 1_000_000;

/// Relative slack used when checking `Σ d(fᵢ(x), aⱼ) ≤ M` in floating point.
pub const INVARIANCE_RTOL: f64 = 1e-9;

/// Σⱼ d(p, aⱼ), summed in focus order.
pub fn distance_sum(foci: &[Point], p: Point) -> f64 {
    foci.iter().fold(0.0, |acc, a| acc + p.distance(*a))
}

/// Closed sub-level set `{x : Σⱼ d(x, aⱼ) ≤ threshold}`.
#[derive(Clone, Debug, PartialEq)]
pub struct MaxwellRegion {
    foci: Vec<Point>,
    threshold: f64,
}

impl MaxwellRegion {
    pub fn new(foci: Vec<Point>, threshold: f64) -> Result<Self> {
        if foci.is_empty() {
            return Err(Error::InvalidArgument("a region needs at least one focus".into()));
        }
        if !(threshold >= 0.0 && threshold.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "threshold {threshold} must be finite and non-negative"
            )));
        }
        if foci.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidArgument("foci must be finite".into()));
        }
        Ok(Self { foci, threshold })
    }

    pub fn foci(&self) -> &[Point] {
        &self.foci
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn distance_sum(&self, p: Point) -> f64 {
        distance_sum(&self.foci, p)
    }

    /// Exact comparison; boundary points belong to the region.
    pub fn contains(&self, p: Point) -> bool {
        self.distance_sum(p) <= self.threshold
    }

    /// Intersection of the squares `aᵢ ± threshold`. Each contains the
    /// region because the whole sum bounds any single term.
    pub fn bounding_box(&self) -> Rect {
        let t = self.threshold;
        let square = |a: &Point| Rect::new(a.x - t, a.y - t, a.x + t, a.y + t);
        let first = square(&self.foci[0]);
        self.foci[1..]
            .iter()
            .try_fold(first, |acc, a| acc.intersect(&square(a)))
            // Only possible when the region itself is empty (threshold below
            // the pairwise focal distance); collapse to the first focus.
            .unwrap_or(Rect {
                min: self.foci[0],
                max: self.foci[0],
            })
    }

    /// `n` points uniformly distributed over the region, by rejection
    /// sampling inside [`bounding_box`](Self::bounding_box).
    ///
    /// A zero threshold yields `n` copies of the first focus.
    pub fn sample_points(&self, n: usize, seed: u64) -> Result<PointSet> {
        if n == 0 {
            return Err(Error::InvalidArgument("sample count must be at least 1".into()));
        }
        if self.threshold == 0.0 {
            return Ok(PointSet::new(vec![self.foci[0]; n]));
        }
        let bbox = self.bounding_box();
        let mut rng = SplitMix64::new(seed);
        let mut out = Vec::with_capacity(n);
        while out.len() < n {
            let mut rejected = 0u64;
            loop {
                let p = Point::new(
                    rng.uniform(bbox.min.x, bbox.max.x),
                    rng.uniform(bbox.min.y, bbox.max.y),
                );
                if self.contains(p) {
                    out.push(p);
                    break;
                }
                rejected += 1;
                if rejected >= MAX_REJECTIONS {
                    return Err(Error::DegenerateRegion(rejected));
                }
            }
        }
        Ok(PointSet::new(out))
    }
}

/// The invariant N-foci ellipse of an IFS together with the constants that
/// define it.
#[derive(Clone, Debug, PartialEq)]
pub struct InvariantEllipse {
    region: MaxwellRegion,
    focal_sums: Vec<f64>,
    lambda_max: f64,
    d_max: f64,
}

impl InvariantEllipse {
    pub fn new(system: &IfsSystem) -> Self {
        let foci = system.fixed_points().to_vec();
        let focal_sums: Vec<f64> = foci.iter().map(|&a| distance_sum(&foci, a)).collect();
        let d_max = focal_sums.iter().copied().fold(0.0, f64::max);
        let lambda_max = system.lambda_max();
        let m = (1.0 + lambda_max) / (1.0 - lambda_max) * d_max;
        Self {
            region: MaxwellRegion { foci, threshold: m },
            focal_sums,
            lambda_max,
            d_max,
        }
    }

    pub fn region(&self) -> &MaxwellRegion {
        &self.region
    }

    pub fn foci(&self) -> &[Point] {
        self.region.foci()
    }

    /// `M`.
    pub fn m_threshold(&self) -> f64 {
        self.region.threshold
    }

    /// `λ = max λᵢ`.
    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    /// `D = max Dᵢ`.
    pub fn d_max(&self) -> f64 {
        self.d_max
    }

    /// `Dᵢ = Σⱼ d(aᵢ, aⱼ)` for every focus, in map order.
    pub fn focal_sums(&self) -> &[f64] {
        &self.focal_sums
    }

    pub fn contains(&self, p: Point) -> bool {
        self.region.contains(p)
    }

    pub fn bounding_box(&self) -> Rect {
        self.region.bounding_box()
    }

    pub fn sample_points(&self, n: usize, seed: u64) -> Result<PointSet> {
        self.region.sample_points(n, seed)
    }

    /// Same foci with a different threshold, for exploring whether a smaller
    /// sum still gives an invariant set. Carries no correctness guarantee.
    pub fn with_threshold(&self, threshold: f64) -> Result<MaxwellRegion> {
        MaxwellRegion::new(self.foci().to_vec(), threshold)
    }
}

/// Convenience wrapper for [`InvariantEllipse::new`].
pub fn ellipse_params(system: &IfsSystem) -> InvariantEllipse {
    InvariantEllipse::new(system)
}

/// Outcome of checking `fᵢ(B) ⊆ B` on sampled points of `B`.
#[derive(Clone, Debug, PartialEq)]
pub struct InvarianceReport {
    pub pass: bool,
    /// max over samples and maps of `Σⱼ d(fᵢ(x), bⱼ) − threshold`.
    pub worst_slack: f64,
    pub n: usize,
    pub seed: u64,
    pub per_map_worst: Vec<f64>,
    pub threshold: f64,
    /// Sample and map index realising `worst_slack`.
    pub worst_sample: Point,
    pub worst_map: usize,
    /// `λ Σⱼ d(x, aⱼ) + (λ + 1) Dᵢ` at the worst sample, with `aⱼ` the fixed
    /// points of the system.
    pub chain_bound: f64,
    /// Both per-term inequalities of the invariance argument held at every
    /// sample and map (each with absolute slack 1e-9).
    pub chain_ok: bool,
}

#[derive(Serialize)]
struct ReportJson<'a> {
    pass: bool,
    worst_slack: f64,
    n: usize,
    seed: u64,
    per_map_worst: &'a [f64],
}

impl InvarianceReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(&ReportJson {
            pass: self.pass,
            worst_slack: self.worst_slack,
            n: self.n,
            seed: self.seed,
            per_map_worst: &self.per_map_worst,
        })
        .expect("report serializes")
    }
}

impl fmt::Display for InvarianceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "result: {}", if self.pass { "pass" } else { "FAIL" })?;
        writeln!(f, "samples: {} (seed {})", self.n, self.seed)?;
        writeln!(f, "threshold: {}", self.threshold)?;
        writeln!(f, "worst slack: {:e}", self.worst_slack)?;
        for (i, w) in self.per_map_worst.iter().enumerate() {
            writeln!(f, "  map {}: {:e}", i + 1, w)?;
        }
        writeln!(
            f,
            "worst sample: {} under map {}",
            self.worst_sample,
            self.worst_map + 1
        )?;
        writeln!(f, "chain bound at worst sample: {}", self.chain_bound)?;
        write!(f, "per-term chain inequalities: {}", if self.chain_ok { "hold" } else { "VIOLATED" })
    }
}

#[derive(Clone, Copy)]
struct Worst {
    slack: f64,
    sample: usize,
    map: usize,
}

impl Worst {
    const NONE: Worst = Worst {
        slack: f64::NEG_INFINITY,
        sample: usize::MAX,
        map: usize::MAX,
    };

    /// Larger slack wins; ties go to the lower (sample, map) so the result
    /// does not depend on the reduction order.
    fn max(self, other: Worst) -> Worst {
        if other.slack > self.slack
            || (other.slack == self.slack && (other.sample, other.map) < (self.sample, self.map))
        {
            other
        } else {
            self
        }
    }
}

/// Samples `n` points of `region`, applies every map, and reports how far
/// the images stray outside. Passes iff the worst excess is at most
/// `1e-9 · (1 + threshold)`.
pub fn verify_invariance(
    system: &IfsSystem,
    region: &MaxwellRegion,
    n: usize,
    seed: u64,
) -> Result<InvarianceReport> {
    let samples = region.sample_points(n, seed)?;
    let threshold = region.threshold();
    let maps = system.maps();
    let fixed = system.fixed_points();
    let lambda = system.lambda_max();
    let focal_sums: Vec<f64> = fixed.iter().map(|&a| distance_sum(fixed, a)).collect();

    let per_sample: Vec<(Vec<f64>, bool)> = samples
        .points()
        .par_iter()
        .map(|&x| {
            let slacks = maps
                .iter()
                .map(|m| region.distance_sum(m.apply(x)) - threshold)
                .collect();
            (slacks, chain_holds(system, lambda, x))
        })
        .collect();

    let mut per_map_worst = vec![f64::NEG_INFINITY; maps.len()];
    let mut worst = Worst::NONE;
    let mut chain_ok = true;
    for (s, (slacks, ok)) in per_sample.iter().enumerate() {
        chain_ok &= ok;
        for (i, &slack) in slacks.iter().enumerate() {
            per_map_worst[i] = per_map_worst[i].max(slack);
            worst = worst.max(Worst {
                slack,
                sample: s,
                map: i,
            });
        }
    }

    let worst_sample = samples.points()[worst.sample];
    let chain_bound = lambda * distance_sum(fixed, worst_sample) + (lambda + 1.0) * focal_sums[worst.map];
    Ok(InvarianceReport {
        pass: worst.slack <= INVARIANCE_RTOL * (1.0 + threshold),
        worst_slack: worst.slack,
        n,
        seed,
        per_map_worst,
        threshold,
        worst_sample,
        worst_map: worst.map,
        chain_bound,
        chain_ok,
    })
}

/// The two per-term inequalities of the invariance argument at `x`:
/// `d(fᵢ(x), aᵢ) ≤ λᵢ d(x, aᵢ)` and, for `j ≠ i`,
/// `d(fᵢ(x), aⱼ) ≤ λ d(x, aⱼ) + (λ + 1) d(aᵢ, aⱼ)`.
pub fn chain_holds(system: &IfsSystem, lambda: f64, x: Point) -> bool {
    const ABS: f64 = 1e-9;
    let fixed = system.fixed_points();
    system.maps().iter().enumerate().all(|(i, m)| {
        let y = m.apply(x);
        let ai = fixed[i];
        fixed.iter().enumerate().all(|(j, &aj)| {
            if i == j {
                y.distance(ai) <= system.ratios()[i] * x.distance(ai) + ABS
            } else {
                y.distance(aj) <= lambda * x.distance(aj) + (lambda + 1.0) * ai.distance(aj) + ABS
            }
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example() -> (IfsSystem, InvariantEllipse) {
        let s = IfsSystem::builtin("paper-example").unwrap();
        let e = ellipse_params(&s);
        (s, e)
    }

    #[test]
    fn example_constants() {
        let (_, e) = example();
        assert!((e.lambda_max() - 0.6).abs() < 1e-12);
        assert!((e.d_max() - 1.0).abs() < 1e-12);
        assert!((e.m_threshold() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn single_map_degenerates() {
        let s = IfsSystem::new(vec![crate::AffineMap::homothety(Point::new(2.0, 3.0), 0.7)]).unwrap();
        let e = ellipse_params(&s);
        assert_eq!(e.d_max(), 0.0);
        assert_eq!(e.m_threshold(), 0.0);
        let pts = e.sample_points(5, 1).unwrap();
        assert!(pts.iter().all(|p| *p == e.foci()[0]));
        let bb = e.bounding_box();
        assert_eq!(bb.min, e.foci()[0]);
        assert_eq!(bb.max, e.foci()[0]);
    }

    #[test]
    fn sierpinski_constants() {
        let e = ellipse_params(&IfsSystem::builtin("sierpinski").unwrap());
        assert!((e.lambda_max() - 0.5).abs() < 1e-15);
        for d in e.focal_sums() {
            assert!((d - 2.0).abs() < 1e-12);
        }
        assert!((e.m_threshold() - 6.0).abs() < 1e-12);
    }

    #[test]
    fn distance_sums() {
        let two = [Point::new(0.0, 0.0), Point::new(1.0, 0.0)];
        assert_eq!(distance_sum(&two, Point::new(0.5, 0.0)), 1.0);
        let tri = crate::ifs::sierpinski_vertices();
        assert!((distance_sum(&tri, tri[2]) - 2.0).abs() < 1e-15);
        // analytic boundary of the sum-4 ellipse, centre (1/2, 0), semi-axes 2, √15/2
        for k in 0..64 {
            let t = k as f64 * std::f64::consts::TAU / 64.0;
            let p = Point::new(0.5 + 2.0 * t.cos(), 15f64.sqrt() / 2.0 * t.sin());
            assert!((distance_sum(&two, p) - 4.0).abs() < 1e-9);
        }
    }

    #[test]
    fn membership() {
        let (_, e) = example();
        assert!(e.contains(Point::new(0.0, 0.0)));
        assert!(!e.contains(Point::new(5.0, 0.0)));
        // leftmost vertex; the computed sum can land a few ulps either side of 4
        let v = Point::new(-1.5, 0.0);
        assert!((e.region().distance_sum(v) - 4.0).abs() < 1e-12);
        let exact = MaxwellRegion::new(vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0)], 4.0).unwrap();
        assert!(exact.contains(v));
    }

    #[test]
    fn example_bounding_box() {
        let (_, e) = example();
        let bb = e.bounding_box();
        assert!((bb.min.x + 3.0).abs() < 1e-12);
        assert!((bb.max.x - 4.0).abs() < 1e-12);
        assert!((bb.min.y + 4.0).abs() < 1e-12);
        assert!((bb.max.y - 4.0).abs() < 1e-12);
    }

    #[test]
    fn sierpinski_bounding_box() {
        let e = ellipse_params(&IfsSystem::builtin("sierpinski").unwrap());
        let bb = e.bounding_box();
        let h = 3f64.sqrt() / 2.0;
        assert!((bb.min.x - (1.0 - 6.0)).abs() < 1e-12);
        assert!((bb.max.x - 6.0).abs() < 1e-12);
        assert!((bb.min.y - (h - 6.0)).abs() < 1e-12);
        assert!((bb.max.y - 6.0).abs() < 1e-12);
    }

    #[test]
    fn sampling() {
        let (_, e) = example();
        let pts = e.sample_points(100, 99).unwrap();
        assert_eq!(pts.len(), 100);
        assert!(pts.iter().all(|p| e.region().distance_sum(*p) <= 4.0 + 1e-12));
        assert_eq!(e.sample_points(10, 42).unwrap(), e.sample_points(10, 42).unwrap());
        assert_ne!(e.sample_points(10, 42).unwrap(), e.sample_points(10, 43).unwrap());
    }

    #[test]
    fn example_is_invariant() {
        let (s, e) = example();
        let r = verify_invariance(&s, e.region(), 10_000, 1).unwrap();
        assert!(r.pass, "{r}");
        assert!(r.worst_slack <= 1e-9 * 5.0);
        assert!(r.chain_ok);
        assert_eq!(r.per_map_worst.len(), 2);
        // the worst image is still under the chain bound, which is under M
        let worst_sum = r.worst_slack + r.threshold;
        assert!(worst_sum <= r.chain_bound + 1e-9);
        assert!(r.chain_bound <= e.m_threshold() + 1e-9);
    }

    #[test]
    fn cantor_is_invariant() {
        let s = IfsSystem::builtin("cantor").unwrap();
        let e = ellipse_params(&s);
        assert!((e.m_threshold() - 2.0).abs() < 1e-12);
        // on the axis the region is [-1/2, 3/2]
        assert!(e.contains(Point::new(-0.5 + 1e-9, 0.0)) && e.contains(Point::new(1.5 - 1e-9, 0.0)));
        assert!(!e.contains(Point::new(-0.5001, 0.0)) && !e.contains(Point::new(1.5001, 0.0)));
        let r = verify_invariance(&s, e.region(), 2000, 3).unwrap();
        assert!(r.pass, "{r}");
    }

    #[test]
    fn unit_disk_is_not_invariant() {
        let (s, _) = example();
        let f2 = s.maps()[1];
        let img = f2.apply(Point::new(0.0, 1.0));
        assert!(img.norm() > 1.13, "{}", img.norm());
        let disk = MaxwellRegion::new(vec![Point::ORIGIN], 1.0).unwrap();
        let r = verify_invariance(&s, &disk, 10_000, 1).unwrap();
        assert!(!r.pass);
        assert!(r.per_map_worst[1] > 0.1);
    }

    #[test]
    fn report_json_keys() {
        let (s, e) = example();
        let r = verify_invariance(&s, e.region(), 50, 5).unwrap();
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        let mut keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        keys.sort();
        assert_eq!(keys, ["n", "pass", "per_map_worst", "seed", "worst_slack"]);
        assert_eq!(v["n"], 50);
        assert_eq!(v["seed"], 5);
    }

    #[test]
    fn region_validation() {
        assert!(MaxwellRegion::new(vec![], 1.0).is_err());
        assert!(MaxwellRegion::new(vec![Point::ORIGIN], -1.0).is_err());
        assert!(MaxwellRegion::new(vec![Point::ORIGIN], f64::NAN).is_err());
    }
}
