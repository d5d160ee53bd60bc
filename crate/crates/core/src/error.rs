use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid convex body: {0}")]
    InvalidBody(String),

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    /// The target grid of a conjugate does not contain the attained slopes,
    /// so the sampled conjugate would be clipped.
    #[error("slope range exceeded: {0}")]
    SlopeRangeExceeded(String),

    #[error("zero mass")]
    ZeroMass,

    #[error("class mismatch: {0}")]
    ClassMismatch(String),

    #[error("hypothesis not met: {0}")]
    HypothesisNotMet(String),

    #[error("necessary condition failed: {0}")]
    NecessaryConditionFailed(String),

    #[error("datum inconsistent: {0}")]
    DatumInconsistent(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
