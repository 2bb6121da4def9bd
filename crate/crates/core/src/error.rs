//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by grid construction, ingestion, metrics, and optimization.
#[derive(Debug, Error)]
pub enum Error {
    /// Mismatched or invalid configuration (grid/class mismatch, bad parameters).
    #[error("configuration error: {0}")]
    Config(String),

    /// Problems assembling input data (missing poses, inconsistent frames).
    #[error("ingestion error: {0}")]
    Ingest(String),

    /// A text file failed to parse; reports the offending line.
    #[error("parse error in {path} line {line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    /// An input value violated a documented precondition.
    #[error("validation error: {0}")]
    Validation(String),

    /// Finalize was called on an accumulator that has seen no frames.
    #[error("empty accumulator: no frames accumulated")]
    EmptyAccumulator,

    /// A metric is undefined for the given inputs (empty coverage, zero variance).
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    /// Optimizer state became invalid (non-finite values).
    #[error("optimizer state error: {0}")]
    OptimizerState(String),

    /// Not enough data to compute the requested quantity.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
