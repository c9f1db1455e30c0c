use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the emulation toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("Cholesky factorization failed: {0}")]
    Factorization(String),

    #[error("rank-deficient regression system: {0}")]
    RankDeficient(String),

    #[error("optimization failed: {0}")]
    Optimization(String),

    #[error("classifier training failed: {0}")]
    Classifier(String),

    #[error("too few non-grounded runs: need at least {needed}, found {found}")]
    TooFewNonGrounded { needed: usize, found: usize },

    #[error("observation {value} lies below the grounding value {g}")]
    BelowGround { value: f64, g: f64 },

    #[error("run `{run}`: {reason}")]
    Trace { run: String, reason: String },

    #[error("{path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
