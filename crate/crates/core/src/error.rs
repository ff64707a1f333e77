use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not square: {0}x{1}")]
    NotSquare(usize, usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not Hermitian (residual {0:.3e})")]
    NotHermitian(f64),

    #[error("effect {effect} is not positive semidefinite (min eigenvalue {min_eig:.3e})")]
    EffectNotPsd { effect: usize, min_eig: f64 },

    #[error("effects do not sum to identity (residual {0:.3e})")]
    Incomplete(f64),

    #[error("state is not positive semidefinite (min eigenvalue {0:.3e})")]
    StateNotPsd(f64),

    #[error("state trace is {0}, expected 1")]
    InvalidTrace(f64),

    #[error("negative Born probability {prob:.3e} for outcome {outcome}")]
    NegativeProbability { outcome: usize, prob: f64 },

    #[error("copy budget exhausted")]
    BudgetExhausted,

    #[error("insufficient copies: need {need}, have {have}")]
    InsufficientCopies { need: u64, have: u64 },

    #[error("insufficient samples: need at least {need}, have {have}")]
    InsufficientSamples { need: usize, have: usize },

    #[error("symbol {symbol} outside alphabet of size {alphabet}")]
    SymbolOutOfRange { symbol: usize, alphabet: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("enumeration too large: {size} exceeds cap {cap}")]
    EnumerationCap { size: u128, cap: u128 },

    #[error("support violation: {0}")]
    SupportViolation(String),

    #[error("basis is not orthonormal (residual {0:.3e})")]
    NotOrthonormal(f64),

    #[error("eigenspace realification failed: {0}")]
    Realification(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("protocol violation: {0}")]
    Protocol(String),

    #[error("io error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
