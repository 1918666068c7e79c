use thiserror::Error;

/// Errors raised anywhere in the compilation toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("invalid dimension {0}")]
    InvalidDimension(usize),

    #[error("matrix is not unitary (deviation {deviation:.3e}, tolerance {tolerance:.1e})")]
    NotUnitary { deviation: f64, tolerance: f64 },

    #[error("matrix is not Hermitian (deviation {deviation:.3e}, tolerance {tolerance:.1e})")]
    NotHermitian { deviation: f64, tolerance: f64 },

    #[error("eigendecomposition failed to converge")]
    NoConvergence,

    #[error("invalid qubit index {index} for a {n}-qubit circuit")]
    InvalidQubit { index: usize, n: usize },

    #[error("slot {slot}: {reason}")]
    InvalidSlot { slot: usize, reason: String },

    #[error("invalid topology: {0}")]
    InvalidTopology(String),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("parameter length {actual} does not match expected {expected}")]
    ParameterLength { expected: usize, actual: usize },

    #[error("wrong parameter scope: expected {expected:?}")]
    WrongScope { expected: crate::circuit::Scope },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid objective: {0}")]
    InvalidObjective(String),

    #[error("decay fit is degenerate: {0}")]
    DegenerateFit(String),

    #[error("unity search exhausted {restarts} restarts; best residual {best_residual:.3e}")]
    UnityNotFound { restarts: usize, best_residual: f64 },

    #[error("leg {leg} of {legs} failed to reach distance {tolerance:.1e}; best distance {best_distance:.3e}")]
    LegFailed {
        leg: usize,
        legs: usize,
        tolerance: f64,
        best_distance: f64,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
