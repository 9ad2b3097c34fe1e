//! Planar iterated function systems and their invariant Maxwell ellipses.
//!
//! Given affine contractions `f₁ … f_N` with fixed points `aᵢ`, the crate
//! builds the multi-foci ellipse `{x : Σⱼ |x − aⱼ| ≤ M}` that every `fᵢ` maps
//! into itself, and computes the attractor two ways:
//!
//! - forward iteration `S, F(S), F²(S), …` from any seed (Hausdorff limit);
//! - deletion iteration `B ⊇ F(B) ⊇ F²(B) ⊇ …` on a raster of the ellipse.
//!
//! ```
//! use ifs_chisel::{ellipse_params, IfsSystem};
//!
//! let system = IfsSystem::builtin("paper-example").unwrap();
//! let ellipse = ellipse_params(&system);
//! assert!((ellipse.m_threshold() - 4.0).abs() < 1e-12);
//! ```

pub mod error;
pub mod geometry;
pub mod hausdorff;
pub mod ifs;
pub mod iteration;
pub mod raster;
pub mod region;
pub mod render;
pub mod rng;

pub use error::{Error, Result};
pub use geometry::{AffineMap, Point, Rect};
pub use hausdorff::{hausdorff_distance, hausdorff_distance_brute};
pub use ifs::{sierpinski_vertices, IfsSystem, PointSet, BUILTIN_NAMES};
pub use iteration::{
    attractor_estimate, attractor_estimate_with, convergence_report, deletion_iterate,
    deletion_iterate_with, forward_iterate, forward_iterate_with, plan_attractor, AttractorPlan,
    ConvergenceReport, DeletionOptions, ForwardOptions, IterationTrace, Stages, TraceMode,
};
pub use raster::{rasterize_region, raster_points, raster_subset, Raster};
pub use region::{
    distance_sum, ellipse_params, verify_invariance, InvariantEllipse, InvarianceReport,
    MaxwellRegion,
};
pub use render::{
    boundary_of, read_pbm, render_locus, write_pbm, write_points_csv, LocusRender,
};
pub use rng::SplitMix64;
