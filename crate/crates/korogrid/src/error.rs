use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors reported by grid, network, and study operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid level {0}: levels must satisfy 1 <= l <= {max}", max = crate::basis1d::MAX_LEVEL)]
    InvalidLevel(u32),

    #[error("invalid position {position} for level {level}: need 1 <= i <= 2^l - 1")]
    InvalidPosition { level: u32, position: u32 },

    #[error("position {position} at level {level} is not odd (hierarchical index required)")]
    PositionNotOdd { level: u32, position: u32 },

    #[error("invalid dimension {0}: need d >= 1")]
    InvalidDimension(usize),

    #[error("invalid resolution {0}: need n >= 1")]
    InvalidResolution(u32),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point count overflow for d = {d}, n = {n}")]
    CountOverflow { d: usize, n: u32 },

    #[error("accuracy {0} out of range: need 0 < eps < 1")]
    InvalidAccuracy(f64),

    #[error("input bound {0} out of range: need M >= 1")]
    InvalidInputBound(f64),

    #[error("quadrature cell count must be >= 1")]
    InvalidQuadratureCells,

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("network shape error: {0}")]
    NetworkShape(String),

    #[error("pad target {target} below current depth {depth}")]
    PadBelowDepth { target: usize, depth: usize },

    #[error("malformed document: {0}")]
    Format(String),

    #[error("unknown test function `{0}`")]
    UnknownFunction(String),

    #[error("test function `{0}` declares no analytic seminorm")]
    NoSeminorm(String),

    #[error("function `{name}` claims a zero boundary but evaluates to {value:e} there")]
    BoundaryViolation { name: String, value: f64 },

    #[error("degenerate fit data: {0}")]
    DegenerateFit(&'static str),

    #[error("resolution cap {cap} reached before grid error {target:.3e} was met")]
    ResolutionCapReached { cap: u32, target: f64 },
}
