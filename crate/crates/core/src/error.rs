use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("singular linear system: |det(I - A)| = {det:e} is below 1e-12")]
    SingularSystem { det: f64 },

    #[error("similitude ratio {0} is outside (0, 1)")]
    InvalidRatio(f64),

    #[error("malformed IFS document: {0}")]
    Parse(String),

    #[error("map {index} is not a contraction (ratio {ratio})")]
    NotAContraction { index: usize, ratio: f64 },

    #[error("an IFS needs at least one map")]
    EmptySystem,

    #[error("point set is empty")]
    EmptyInput,

    #[error("unknown builtin system `{0}` (expected cantor, sierpinski or paper-example)")]
    UnknownName(String),

    #[error("rejection sampling failed {0} consecutive times")]
    DegenerateRegion(u64),

    #[error("rasters do not share a grid")]
    GridMismatch,

    #[error("raster has no marked cells")]
    EmptyRaster,

    #[error("iteration would produce {needed} points, above the cap of {cap}")]
    ResourceLimit { needed: u128, cap: usize },

    #[error("map {0} has a singular linear part and cannot be inverted")]
    NonInvertibleMap(usize),

    #[error("deletion stage {0} lost every cell; raise the resolution")]
    EmptyStage(usize),

    #[error("trace is degenerate: {0}")]
    DegenerateTrace(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
