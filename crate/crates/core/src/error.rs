//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Too few samples for the requested operation.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Inputs violate a documented precondition (shape, stage, range).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A numerical routine failed beyond repair (singularity, NaN).
    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    /// A point violates the lp-ball constraint where strict interiority is required.
    #[error("infeasible point: {0}")]
    InfeasiblePoint(String),

    /// Metric undefined for this input (e.g. single-class AUC).
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed cell in a dataset file; row is 1-based over data rows.
    #[error("parse error in {path} at row {row}, column {column}: {message}")]
    Parse {
        path: String,
        row: usize,
        column: String,
        message: String,
    },

    /// More than half of the requested trials failed.
    #[error("run failed: {0}")]
    RunFailed(String),
}
