use thiserror::Error;

/// Errors raised by the library. Each variant maps onto one CLI exit code class.
#[derive(Debug, Error)]
pub enum LatconvError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    #[error("function is identically zero")]
    ZeroFunction,
    #[error("symbol is not normalized: sup |symbol| = {0}")]
    NotNormalized(f64),
    #[error("point is not on the unit-modulus set: |symbol| = {0}")]
    NotUnitModulus(f64),
    #[error("analysis did not succeed: {0}")]
    AnalysisFailed(String),
    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),
    #[error("invalid polynomial: {0}")]
    InvalidPolynomial(String),
    #[error("input is not a probability distribution: {0}")]
    NotProbability(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, LatconvError>;

impl LatconvError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        LatconvError::InvalidArgument(msg.into())
    }
}
