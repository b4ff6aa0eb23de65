//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Input violates a precondition (bad vertex set, mismatched sizes, ...).
    #[error("{0}")]
    Domain(String),

    /// The request exceeds a configured dense/exhaustive size limit.
    #[error("{0}")]
    Size(String),

    /// A text input failed to parse; `line` is 1-based.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// A forced measurement outcome has (numerically) zero probability.
    #[error("impossible branch at step {step}: outcome {outcome} has probability {prob:.3e}")]
    ImpossibleBranch {
        step: usize,
        outcome: u8,
        prob: f64,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn size(msg: impl Into<String>) -> Error {
    Error::Size(msg.into())
}
