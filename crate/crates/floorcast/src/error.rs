use thiserror::Error;

/// Errors shared across the library.
#[derive(Debug, Error)]
pub enum FloorcastError {
    #[error("alpha out of domain: {0} (must satisfy 0 < alpha < 1)")]
    AlphaDomain(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("length mismatch: {left} vs {right} ({context})")]
    LengthMismatch {
        left: usize,
        right: usize,
        context: String,
    },

    #[error("parse error at {path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("unsupported schema version {found} (expected {expected})")]
    SchemaVersion { found: u64, expected: u64 },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("training diverged at step {step} (loss = {loss})")]
    Diverged { step: u64, loss: f64 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, FloorcastError>;
