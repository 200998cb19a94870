use std::io;

use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("coupling matrix is not symmetric at ({i}, {j}): {a} != {b}")]
    Asymmetric { i: usize, j: usize, a: f64, b: f64 },

    #[error("coupling matrix has nonzero diagonal entry {value} at {i}")]
    NonzeroDiagonal { i: usize, value: f64 },

    #[error("malformed CSR structure: {0}")]
    MalformedCsr(String),

    #[error("non-finite value {value} at index {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("spin entries must be -1 or +1, found {value} at index {index}")]
    InvalidSpin { index: usize, value: i64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("initial state is the zero vector")]
    ZeroInitialState,

    #[error("coupling matrix has no nonzero entries")]
    DegenerateMatrix,

    #[error("power iteration did not converge after {iterations} iterations (best estimate {estimate}, residual {residual})")]
    NotConverged {
        estimate: f64,
        residual: f64,
        iterations: usize,
    },

    #[error("state has a zero component at index {0}; the fixed-point Jacobian is undefined")]
    ZeroComponent(usize),

    #[error("instance has {n} spins; exhaustive search is capped at {cap}")]
    TooLarge { n: usize, cap: usize },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("bad CSR container: {0}")]
    BadContainer(String),

    #[error("trace schema violation: {0}")]
    TraceSchema(String),

    #[error("bench configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
