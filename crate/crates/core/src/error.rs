use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("empty domain: every node is masked")]
    EmptyDomain,
    #[error("index {index:?} out of range for dims {dims:?}")]
    IndexOutOfRange { index: Vec<usize>, dims: Vec<usize> },
    #[error("point ({0}, {1}) lies outside the rectangle")]
    PointOutside(f64, f64),
    #[error("masked seed: point ({0}, {1}) falls in an obstacle")]
    MaskedSeed(f64, f64),
    #[error("matrix is not symmetric positive definite")]
    NotPositiveDefinite,
    #[error("Selling iteration did not reach an obtuse superbase within {0} steps")]
    SellingNoConvergence(usize),
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),
    #[error("node {0} is masked")]
    MaskedNode(usize),
    #[error("node {0} was not reached by the front")]
    Unreached(usize),
    #[error("path tracing exhausted its budget of {0} steps")]
    IterationBudget(usize),
    #[error("degenerate path: {0}")]
    DegeneratePath(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("soft-min of an empty or all-infinite list")]
    SoftminEmpty,
    #[error("sensor configuration: {0}")]
    InvalidSensors(String),
    #[error("unreachable keypoint")]
    UnreachableKeypoint,
    #[error("objective is not finite at the starting point")]
    NonFiniteStart,
    #[error("gradient check failed: {0}")]
    GradientCheck(String),
    #[error("line search failed before any progress")]
    LineSearchFailed,
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Whether the failure comes from the numerics rather than from the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SellingNoConvergence(_)
                | Error::Unreached(_)
                | Error::IterationBudget(_)
                | Error::SoftminEmpty
                | Error::UnreachableKeypoint
                | Error::NonFiniteStart
                | Error::GradientCheck(_)
                | Error::LineSearchFailed
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
