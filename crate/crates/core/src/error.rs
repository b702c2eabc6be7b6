use thiserror::Error;

/// Errors produced by instance construction, parsing, analysis, and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: row {row} has {len} entries, expected {n}")]
    NonSquareMatrix { row: usize, len: usize, n: usize },

    #[error("non-finite weight at ({row}, {col})")]
    NonFiniteWeight { row: usize, col: usize },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("density must lie in [0, 1], got {0}")]
    InvalidDensity(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error at position {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("conflicting constraints involving x{a} and x{b}")]
    Conflict { a: usize, b: usize },

    #[error("variable index {index} out of range for n = {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("{operation} supports at most n = {cap}, got n = {n}")]
    ResourceCap {
        operation: &'static str,
        n: usize,
        cap: usize,
    },

    #[error("format error at byte {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error("sample is empty")]
    EmptySample,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
