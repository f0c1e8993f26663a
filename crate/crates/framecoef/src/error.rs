//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by frame construction, sampling, inference and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected length {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("image size {rows}x{cols} does not support {levels} dyadic levels")]
    NonDyadic {
        rows: usize,
        cols: usize,
        levels: usize,
    },

    #[error("operation requires a union-of-orthonormal-bases frame")]
    NotUnionFrame,

    #[error("gram solve did not converge: relative residual {residual:.3e} after {iterations} iterations")]
    GramSolve { residual: f64, iterations: usize },

    #[error("rejection sampler exhausted {0} attempts without entering the constraint set")]
    RejectionExhausted(u64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("pgm error: {0}")]
    Pgm(String),

    #[error("trace format error: {0}")]
    TraceFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
