//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported sphere dimension {0} (only S^1 and S^2)")]
    BadDimension(usize),
    #[error("bad grid resolution: {0}")]
    BadResolution(String),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("direction is not a unit vector of the right dimension")]
    BadDirection,
    #[error("support function must be strictly positive (origin interior); min h = {0}")]
    NonPositiveSupport(f64),
    #[error("body is not convex: min eigenvalue of [D^2 h + h I] is {min_eig}")]
    NonConvex { min_eig: f64 },
    #[error("no good-position polytope with {k} vertices on S^{n}")]
    InadmissiblePolytope { n: usize, k: usize },
    #[error("group closure exceeded {cap} elements; generators are not a finite subgroup at this tolerance")]
    ClosureOverflow { cap: usize },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("numerical solve failed: {0}")]
    Solver(String),
    #[error("convexity lost during flow at t = {t}, step {step}: min eigenvalue {min_eig}")]
    ConvexityLost { t: f64, step: usize, min_eig: f64 },
    #[error("trajectory too short to classify (need {need} samples, have {have})")]
    TrajectoryTooShort { need: usize, have: usize },
    #[error("blow-up time extrapolation unstable: {0}")]
    ExtrapolationUnstable(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed file {path}: {what}")]
    Format { path: String, what: String },
}
