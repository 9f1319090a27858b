use thiserror::Error;

/// Errors raised by objectives, optimizers, certifiers and the model zoo.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value encountered at coordinate {coordinate}")]
    NonFinite { coordinate: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("rank deficient matrix: {0}")]
    Rank(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("gradient descent diverged at step {step}")]
    Divergence { step: u64 },

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
