use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("state is not normalized: squared norm {norm_sqr} (tolerance {tolerance})")]
    Unnormalized { norm_sqr: f64, tolerance: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("option value {k} outside 1..={volume}")]
    OptionOutOfRange { k: u64, volume: u64 },

    #[error("selected block {block} has zero norm")]
    ZeroNormBlock { block: usize },

    #[error("classical trajectory left the grid range at step {step} (x = {x})")]
    OutOfRange { step: usize, x: f64 },

    #[error("grid of {points} points exceeds the configured cap of {cap}")]
    CapExceeded { points: usize, cap: usize },

    #[error("propagator key does not match the supplied field and grid")]
    KeyMismatch,

    #[error("no propagator stored for key {0}")]
    MissingEntry(String),

    #[error("unknown reaction: {0}")]
    UnknownReaction(String),

    #[error("outcome is not admitted for assembly")]
    NotAdmitted,

    #[error("Lippmann-Schwinger iteration diverged after {iterations} iterations (last update {last_update:e})")]
    Divergence { iterations: usize, last_update: f64 },

    #[error("singular resolvent: E - H + i*eta is not invertible")]
    SingularResolvent,

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: msg.into(),
        }
    }

    pub(crate) fn io(path: &std::path::Path, err: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }
}
