//! Forward (Hutchinson) iteration and deletion iteration, with the
//! diagnostics that go with them.
//!
//! Forward iteration pushes a seed through `F` and converges to the attractor
//! in the Hausdorff metric. Deletion iteration starts from a raster of an
//! invariant set `B` and produces the nested chain `B ⊇ F(B) ⊇ F²(B) ⊇ …`,
//! computed by inverse mapping: a target cell is kept iff some `fᵢ⁻¹` sends
//! its centre into a kept cell of the previous stage.

use std::fmt;
use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{AffineMap, Point};
use crate::hausdorff::hausdorff_distance;
use crate::ifs::{IfsSystem, PointSet};
use crate::raster::{raster_points, raster_subset, Raster};

/// Default cap on the number of points a forward stage may hold.
pub const DEFAULT_MAX_POINTS: usize = 1 << 24;

/// Allowance added to `λ` when judging consecutive Hausdorff ratios.
pub const RATIO_SLACK: f64 = 0.05;

/// Consecutive distances below this are treated as converged.
pub const CONVERGED_EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceMode {
    Forward,
    Deletion,
}

impl fmt::Display for TraceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TraceMode::Forward => "forward",
            TraceMode::Deletion => "deletion",
        })
    }
}

#[derive(Clone, Debug)]
pub enum Stages {
    Points(Vec<PointSet>),
    Rasters(Vec<Raster>),
}

/// The sequence `S, F(S), F²(S), …` with diagnostics. Stage 0 is the seed.
#[derive(Clone, Debug)]
pub struct IterationTrace {
    stages: Stages,
    consecutive_hausdorff: Vec<f64>,
    nesting_ok: Vec<bool>,
}

impl IterationTrace {
    pub fn mode(&self) -> TraceMode {
        match self.stages {
            Stages::Points(_) => TraceMode::Forward,
            Stages::Rasters(_) => TraceMode::Deletion,
        }
    }

    pub fn stages(&self) -> &Stages {
        &self.stages
    }

    pub fn len(&self) -> usize {
        match &self.stages {
            Stages::Points(s) => s.len(),
            Stages::Rasters(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point_stages(&self) -> Option<&[PointSet]> {
        match &self.stages {
            Stages::Points(s) => Some(s),
            Stages::Rasters(_) => None,
        }
    }

    pub fn raster_stages(&self) -> Option<&[Raster]> {
        match &self.stages {
            Stages::Rasters(s) => Some(s),
            Stages::Points(_) => None,
        }
    }

    /// `d_H(stage k+1, stage k)` for every k.
    pub fn consecutive_hausdorff(&self) -> &[f64] {
        &self.consecutive_hausdorff
    }

    /// Deletion mode only: stage k+1 nested in stage k at 1-cell tolerance.
    pub fn nesting_ok(&self) -> &[bool] {
        &self.nesting_ok
    }

    /// Points in a forward stage or marked cells in a deletion stage.
    pub fn cardinality(&self, k: usize) -> usize {
        match &self.stages {
            Stages::Points(s) => s[k].len(),
            Stages::Rasters(s) => s[k].marked_count(),
        }
    }

    fn cell_size(&self) -> f64 {
        match &self.stages {
            Stages::Rasters(s) => s[0].cell_size(),
            Stages::Points(_) => 0.0,
        }
    }

    /// One row per stage: `index,count,hausdorff,nesting`; the last two are
    /// blank where undefined.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "index,count,hausdorff,nesting")?;
        for k in 0..self.len() {
            let h = if k == 0 {
                String::new()
            } else {
                self.consecutive_hausdorff[k - 1].to_string()
            };
            let nest = match (k, self.mode()) {
                (0, _) | (_, TraceMode::Forward) => String::new(),
                _ => self.nesting_ok[k - 1].to_string(),
            };
            writeln!(out, "{k},{},{h},{nest}", self.cardinality(k))?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ForwardOptions {
    pub max_points: usize,
    /// Quantized dedup cell side applied after every step; off by default so
    /// that stage k has exactly `N^k·|seed|` points.
    pub dedup_cell: Option<f64>,
}

impl Default for ForwardOptions {
    fn default() -> Self {
        Self {
            max_points: DEFAULT_MAX_POINTS,
            dedup_cell: None,
        }
    }
}

pub fn forward_iterate(system: &IfsSystem, seed: &PointSet, n: usize) -> Result<IterationTrace> {
    forward_iterate_with(system, seed, n, &ForwardOptions::default())
}

pub fn forward_iterate_with(
    system: &IfsSystem,
    seed: &PointSet,
    n: usize,
    opts: &ForwardOptions,
) -> Result<IterationTrace> {
    if seed.is_empty() {
        return Err(Error::EmptyInput);
    }
    if opts.dedup_cell.is_none() {
        let needed = (system.len() as u128)
            .checked_pow(n as u32)
            .and_then(|p| p.checked_mul(seed.len() as u128))
            .unwrap_or(u128::MAX);
        if needed > opts.max_points as u128 {
            return Err(Error::ResourceLimit {
                needed,
                cap: opts.max_points,
            });
        }
    }
    let mut stages = vec![seed.clone()];
    let mut hausdorff = Vec::with_capacity(n);
    for _ in 0..n {
        let prev = stages.last().expect("seed stage");
        let needed = prev.len() as u128 * system.len() as u128;
        if needed > opts.max_points as u128 {
            return Err(Error::ResourceLimit {
                needed,
                cap: opts.max_points,
            });
        }
        let mut next = system.hutchinson(prev)?;
        if let Some(cell) = opts.dedup_cell {
            next = next.dedup_quantized(cell);
        }
        hausdorff.push(hausdorff_distance(&next, prev)?);
        stages.push(next);
    }
    Ok(IterationTrace {
        stages: Stages::Points(stages),
        consecutive_hausdorff: hausdorff,
        nesting_ok: Vec::new(),
    })
}

#[derive(Clone, Copy, Debug)]
pub struct DeletionOptions {
    /// Step maps with a singular linear part forward (with 1-cell dilation)
    /// instead of failing with [`Error::NonInvertibleMap`].
    pub forward_fallback: bool,
}

impl Default for DeletionOptions {
    fn default() -> Self {
        Self {
            forward_fallback: true,
        }
    }
}

pub fn deletion_iterate(system: &IfsSystem, b0: &Raster, n: usize) -> Result<IterationTrace> {
    deletion_iterate_with(system, b0, n, &DeletionOptions::default())
}

pub fn deletion_iterate_with(
    system: &IfsSystem,
    b0: &Raster,
    n: usize,
    opts: &DeletionOptions,
) -> Result<IterationTrace> {
    if b0.is_empty() {
        return Err(Error::EmptyRaster);
    }
    let mut inverses = Vec::new();
    let mut singular = Vec::new();
    for (i, m) in system.maps().iter().enumerate() {
        match m.inverse() {
            Some(inv) => inverses.push(inv),
            None if opts.forward_fallback => singular.push(*m),
            None => return Err(Error::NonInvertibleMap(i)),
        }
    }

    let mut stages = vec![b0.clone()];
    let mut points = raster_points(b0)?;
    let mut hausdorff = Vec::with_capacity(n);
    let mut nesting = Vec::with_capacity(n);
    for k in 0..n {
        let prev = stages.last().expect("seed stage");
        let next = deletion_step(prev, &inverses, &singular);
        if next.is_empty() {
            return Err(Error::EmptyStage(k + 1));
        }
        let next_points = raster_points(&next)?;
        nesting.push(raster_subset(&next, prev, 1)?);
        hausdorff.push(hausdorff_distance(&next_points, &points)?);
        points = next_points;
        stages.push(next);
    }
    Ok(IterationTrace {
        stages: Stages::Rasters(stages),
        consecutive_hausdorff: hausdorff,
        nesting_ok: nesting,
    })
}

fn deletion_step(prev: &Raster, inverses: &[AffineMap], singular: &[AffineMap]) -> Raster {
    let mut next = prev.from_fn(|c| {
        inverses.iter().any(|inv| {
            prev.cell_of(inv.apply(c))
                .is_some_and(|(i, j)| prev.get(i, j))
        })
    });
    if !singular.is_empty() {
        let hits: Vec<(usize, usize)> = prev
            .marked_cells()
            .collect::<Vec<_>>()
            .par_iter()
            .flat_map_iter(|&(i, j)| {
                let c = prev.cell_center(i, j);
                singular.iter().filter_map(move |m| prev.cell_of(m.apply(c)))
            })
            .collect();
        let mut forward = prev.with_cells(&vec![false; prev.width() * prev.height()]);
        for (i, j) in hits {
            forward.set(i, j, true);
        }
        let forward = forward.dilate(1);
        for (i, j) in forward.marked_cells().collect::<Vec<_>>() {
            next.set(i, j, true);
        }
    }
    next
}

/// Verdict on how fast consecutive Hausdorff distances shrink.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub mode: TraceMode,
    /// `d_H(k+1, k) / d_H(k, k-1)` for each judged k.
    pub ratios: Vec<f64>,
    pub lambda_max: f64,
    /// Ratio allowance, `λ + 0.05`.
    pub ratio_bound: f64,
    /// Absolute allowance on each distance; the cell size in deletion mode.
    pub abs_slack: f64,
    /// First stage whose distance to its predecessor fell below 1e-12.
    pub converged_at: Option<usize>,
    pub pass: bool,
}

impl fmt::Display for ConvergenceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "mode: {}", self.mode)?;
        writeln!(f, "ratio bound: {} (+{} absolute)", self.ratio_bound, self.abs_slack)?;
        for (k, r) in self.ratios.iter().enumerate() {
            writeln!(f, "  r_{} = {}", k + 1, r)?;
        }
        if let Some(k) = self.converged_at {
            writeln!(f, "converged at stage {k}")?;
        }
        write!(f, "result: {}", if self.pass { "pass" } else { "FAIL" })
    }
}

/// Checks `d_H(k+1, k) ≤ (λ + 0.05)·d_H(k, k−1) + s` along the trace, with
/// `s` the cell size for deletion traces and zero otherwise. Once a distance
/// drops below 1e-12 the remaining ratios are undefined and the trace is
/// reported as converged.
pub fn convergence_report(trace: &IterationTrace, lambda_max: f64) -> Result<ConvergenceReport> {
    if trace.len() < 3 {
        return Err(Error::DegenerateTrace(format!(
            "need at least 3 stages, got {}",
            trace.len()
        )));
    }
    let d = trace.consecutive_hausdorff();
    let ratio_bound = lambda_max + RATIO_SLACK;
    let abs_slack = trace.cell_size();
    let mut ratios = Vec::new();
    let mut pass = true;
    let mut converged_at = None;
    if d[0] < CONVERGED_EPS {
        converged_at = Some(1);
    } else {
        for k in 1..d.len() {
            if d[k] < CONVERGED_EPS {
                converged_at = Some(k + 1);
                break;
            }
            ratios.push(d[k] / d[k - 1]);
            pass &= d[k] <= ratio_bound * d[k - 1] + abs_slack;
        }
    }
    Ok(ConvergenceReport {
        mode: trace.mode(),
        ratios,
        lambda_max,
        ratio_bound,
        abs_slack,
        converged_at,
        pass,
    })
}

/// Depth chosen by [`attractor_estimate`] and the quantities behind it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AttractorPlan {
    pub depth: usize,
    /// `d_H({seed}, F({seed}))`.
    pub initial_gap: f64,
    /// A-priori bound `λⁿ/(1−λ)·initial_gap` at the chosen depth.
    pub banach_bound: f64,
    /// Dedup cell side applied after every step.
    pub dedup_cell: f64,
}

/// Plans an attractor estimate within `eps`. Three quarters of the budget go
/// to the a-priori Banach bound; the remaining quarter covers the per-step
/// dedup, whose errors add up to at most `δ/(1−λ)` for merge radius `δ`.
pub fn plan_attractor(system: &IfsSystem, eps: f64, seed: Point) -> Result<AttractorPlan> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!("eps {eps} must be positive")));
    }
    let lambda = system.lambda_max();
    let start = PointSet::singleton(seed);
    let initial_gap = hausdorff_distance(&start, &system.hutchinson(&start)?)?;
    let budget = 0.75 * eps;
    let mut depth = 0;
    let mut bound = initial_gap / (1.0 - lambda);
    while bound > budget {
        depth += 1;
        bound *= lambda;
    }
    let merge_radius = 0.25 * eps * (1.0 - lambda);
    Ok(AttractorPlan {
        depth,
        initial_gap,
        banach_bound: bound,
        dedup_cell: merge_radius / std::f64::consts::SQRT_2,
    })
}

/// `F^n({seed})` with `n` from [`plan_attractor`]; within Hausdorff distance
/// `eps` of the attractor.
pub fn attractor_estimate(system: &IfsSystem, eps: f64, seed: Point) -> Result<PointSet> {
    attractor_estimate_with(system, eps, seed, DEFAULT_MAX_POINTS)
}

pub fn attractor_estimate_with(
    system: &IfsSystem,
    eps: f64,
    seed: Point,
    max_points: usize,
) -> Result<PointSet> {
    let plan = plan_attractor(system, eps, seed)?;
    let mut set = PointSet::singleton(seed);
    for _ in 0..plan.depth {
        let needed = set.len() as u128 * system.len() as u128;
        if needed > max_points as u128 {
            return Err(Error::ResourceLimit {
                needed,
                cap: max_points,
            });
        }
        set = system.hutchinson(&set)?.dedup_quantized(plan.dedup_cell);
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::rasterize_region;
    use crate::region::ellipse_params;

    #[test]
    fn zero_steps_is_seed() {
        let s = IfsSystem::builtin("paper-example").unwrap();
        let seed = PointSet::singleton(Point::new(1.0, 1.0));
        let t = forward_iterate(&s, &seed, 0).unwrap();
        assert_eq!(t.len(), 1);
        assert!(t.consecutive_hausdorff().is_empty());
        assert_eq!(t.point_stages().unwrap()[0], seed);
    }

    #[test]
    fn cantor_two_steps() {
        let s = IfsSystem::builtin("cantor").unwrap();
        let t = forward_iterate(&s, &PointSet::singleton(Point::ORIGIN), 2).unwrap();
        let last = &t.point_stages().unwrap()[2];
        let xs: Vec<f64> = last.iter().map(|p| p.x).collect();
        let expected = [0.0, 2.0 / 9.0, 2.0 / 3.0, 8.0 / 9.0];
        for (x, e) in xs.iter().zip(expected) {
            assert!((x - e).abs() < 1e-15);
        }
        assert!(last.iter().all(|p| p.y == 0.0));
    }

    #[test]
    fn tenth_iterate_has_1024_points() {
        let s = IfsSystem::builtin("paper-example").unwrap();
        let t = forward_iterate(&s, &PointSet::singleton(Point::new(1.0, 1.0)), 10).unwrap();
        for k in 0..=10 {
            assert_eq!(t.cardinality(k), 1 << k);
        }
    }

    #[test]
    fn resource_limit() {
        let s = IfsSystem::builtin("sierpinski").unwrap();
        let opts = ForwardOptions {
            max_points: 1000,
            dedup_cell: None,
        };
        let seed = PointSet::singleton(Point::ORIGIN);
        assert!(matches!(
            forward_iterate_with(&s, &seed, 7, &opts),
            Err(Error::ResourceLimit { needed: 2187, cap: 1000 })
        ));
        assert!(forward_iterate_with(&s, &seed, 6, &opts).is_ok());
        // dedup lets the same depth through
        let dedup = ForwardOptions {
            max_points: 1000,
            dedup_cell: Some(0.05),
        };
        assert!(forward_iterate_with(&s, &seed, 7, &dedup).is_ok());
    }

    #[test]
    fn homothety_deletion_concentrates() {
        let s = IfsSystem::new(vec![AffineMap::homothety(Point::ORIGIN, 0.5)]).unwrap();
        let b0 = rasterize_region(|_| true, crate::Rect::new(-1.0, -1.0, 1.0, 1.0), 64).unwrap();
        let t = deletion_iterate(&s, &b0, 4).unwrap();
        assert!(t.nesting_ok().iter().all(|&ok| ok));
        let counts: Vec<usize> = (0..5).map(|k| t.cardinality(k)).collect();
        assert_eq!(counts, [4096, 1024, 256, 64, 16]);
        let last = &t.raster_stages().unwrap()[4];
        for p in raster_points(last).unwrap().iter() {
            assert!(p.x.abs() <= 1.0 / 16.0 && p.y.abs() <= 1.0 / 16.0);
        }
    }

    #[test]
    fn deletion_empty_stage() {
        let s = IfsSystem::new(vec![AffineMap::homothety(Point::new(5.0, 5.0), 0.5)]).unwrap();
        let b0 = rasterize_region(|_| true, crate::Rect::new(0.0, 0.0, 1.0, 1.0), 8).unwrap();
        assert!(matches!(deletion_iterate(&s, &b0, 3), Err(Error::EmptyStage(_))));
    }

    #[test]
    fn singular_map_fallback() {
        // projection onto the x-axis, scaled by 1/2
        let proj = AffineMap::new(0.5, 0.0, 0.0, 0.0, 0.0, 0.0);
        let s = IfsSystem::new(vec![proj]).unwrap();
        let b0 = rasterize_region(|_| true, crate::Rect::new(-1.0, -1.0, 1.0, 1.0), 16).unwrap();
        assert!(matches!(
            deletion_iterate_with(&s, &b0, 1, &DeletionOptions { forward_fallback: false }),
            Err(Error::NonInvertibleMap(0))
        ));
        let t = deletion_iterate(&s, &b0, 2).unwrap();
        let stage = &t.raster_stages().unwrap()[2];
        for p in raster_points(stage).unwrap().iter() {
            assert!(p.y.abs() <= 2.0 * stage.cell_size());
        }
    }

    #[test]
    fn example_deletion_two_steps() {
        let s = IfsSystem::builtin("paper-example").unwrap();
        let e = ellipse_params(&s);
        let b0 = rasterize_region(|p| e.contains(p), e.bounding_box(), 256).unwrap();
        let t = deletion_iterate(&s, &b0, 2).unwrap();
        assert!(t.nesting_ok().iter().all(|&ok| ok));
        assert!(t.cardinality(2) < t.cardinality(1) && t.cardinality(1) < t.cardinality(0));
        // stage 1 holds two copies with areas λ₁² + λ₂² = 0.61 of B (they may overlap)
        let frac = t.cardinality(1) as f64 / t.cardinality(0) as f64;
        assert!(frac <= 0.61 + 0.02, "{frac}");
    }

    #[test]
    fn report_on_identical_stages() {
        let s = IfsSystem::new(vec![AffineMap::homothety(Point::ORIGIN, 0.5)]).unwrap();
        let t = forward_iterate(&s, &PointSet::singleton(Point::ORIGIN), 4).unwrap();
        let r = convergence_report(&t, 0.5).unwrap();
        assert_eq!(r.converged_at, Some(1));
        assert!(r.pass);
    }

    #[test]
    fn report_needs_three_stages() {
        let s = IfsSystem::builtin("cantor").unwrap();
        let t = forward_iterate(&s, &PointSet::singleton(Point::ORIGIN), 1).unwrap();
        assert!(matches!(
            convergence_report(&t, 1.0 / 3.0),
            Err(Error::DegenerateTrace(_))
        ));
    }

    #[test]
    fn cantor_ratios_are_one_third() {
        let s = IfsSystem::builtin("cantor").unwrap();
        let t = forward_iterate(&s, &PointSet::singleton(Point::ORIGIN), 7).unwrap();
        let r = convergence_report(&t, 1.0 / 3.0).unwrap();
        assert!(r.pass);
        assert_eq!(r.ratios.len(), 6);
        for q in r.ratios {
            assert!((q - 1.0 / 3.0).abs() < 1e-9);
        }
    }

    #[test]
    fn attractor_plan_depths() {
        let cantor = IfsSystem::builtin("cantor").unwrap();
        let plan = plan_attractor(&cantor, 1e-3, Point::ORIGIN).unwrap();
        assert!((plan.initial_gap - 2.0 / 3.0).abs() < 1e-15);
        // (1/3)^n ≤ 7.5e-4 first holds at n = 7
        assert_eq!(plan.depth, 7);
        let sier = IfsSystem::builtin("sierpinski").unwrap();
        // (1/2)^n ≤ 7.5e-3 first holds at n = 8
        assert_eq!(plan_attractor(&sier, 1e-2, Point::ORIGIN).unwrap().depth, 8);
    }

    #[test]
    fn attractor_of_single_map_is_its_fixed_point() {
        let c = Point::new(0.3, -0.7);
        let s = IfsSystem::new(vec![AffineMap::homothety(c, 0.4)]).unwrap();
        for eps in [1.0, 1e-3, 1e-9] {
            let a = attractor_estimate(&s, eps, s.fixed_points()[0]).unwrap();
            assert_eq!(a.len(), 1);
            assert!(a.points()[0].distance(c) < 1e-15);
        }
    }

    #[test]
    fn trace_csv() {
        let s = IfsSystem::builtin("cantor").unwrap();
        let t = forward_iterate(&s, &PointSet::singleton(Point::ORIGIN), 2).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "index,count,hausdorff,nesting");
        assert_eq!(lines[1], "0,1,,");
        assert!(lines[2].starts_with("1,2,0.66666"));
        assert_eq!(lines.len(), 4);
    }
}
