use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the filters, the models and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("non-finite value in {quantity}")]
    NonFinite { quantity: &'static str },

    #[error("invalid configuration: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("combination diverged at iteration {iteration}")]
    Divergence { iteration: u64 },

    #[error("transient model diverged at iteration {iteration}")]
    ModelDivergence { iteration: u64 },

    #[error("unstable operating point: mu * tr(R_u) = {product} >= 2")]
    Unstable { product: f64 },

    #[error("degenerate filter pool: {0}")]
    DegeneratePool(String),

    #[error("experiment failed: {diverged} of {total} realizations diverged")]
    ExperimentFailed { diverged: usize, total: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, actual })
    }
}
