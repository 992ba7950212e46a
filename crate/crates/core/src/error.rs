use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("no covariate within the kernel window at x = {x:?} (h = {h})")]
    EmptyWindow { x: Vec<f64>, h: f64 },

    #[error("degenerate denominator: estimated conditional cdf {cdf} is within {guard} of 1")]
    DegenerateDenominator { cdf: f64, guard: f64 },

    #[error("estimated design density is not positive at x = {0:?}")]
    ZeroDensity(Vec<f64>),

    #[error("every grid point has an empty kernel window")]
    AllMissing,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
