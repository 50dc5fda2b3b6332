use thiserror::Error;

/// Failure modes shared by every module.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("partition {0} does not fit in the {1}x{2} box")]
    BoxViolation(String, usize, usize),
    #[error("partition {inner} is not contained in {outer}")]
    Containment { inner: String, outer: String },
    #[error("size mismatch: {0} != {1}")]
    SizeMismatch(usize, usize),
    #[error("partition has {len} parts but only {n} variables")]
    Length { len: usize, n: usize },
    #[error("h-series degree cap {cap} below required degree {needed}")]
    CapExceeded { cap: usize, needed: usize },
    #[error("argument out of range: {0}")]
    Range(String),
    #[error("internal inconsistency: {0}")]
    Inconsistent(String),
    #[error("coincident points: {0}")]
    Coincidence(String),
    #[error("pole: {0}")]
    Pole(String),
    #[error("resource limit: {0}")]
    ResourceLimit(String),
    #[error("not enough samples: need {needed}, got {got}")]
    DegreeDeficiency { needed: usize, got: usize },
    #[error("interpolation residual at t = {0}")]
    Residual(i64),
    #[error("convergence failure: {0}")]
    Convergence(String),
    #[error("dimension {dim} exceeds the cap {cap}")]
    DimensionCap { dim: usize, cap: usize },
    #[error("divergent series: {0}")]
    Divergence(String),
    #[error("unknown functional: {0}")]
    UnknownFunctional(String),
    #[error("numerical overflow: {0}")]
    Overflow(String),
    #[error("{0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
