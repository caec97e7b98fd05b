use std::io;

use thiserror::Error;

/// Errors raised by word parsing, validation, rewriting and the search drivers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("illegal character {found:?} at position {position} (expected A, B or C)")]
    Format { position: usize, found: char },

    #[error("incomplete word: counts {a},{b},{c}")]
    Incomplete { a: usize, b: usize, c: usize },

    #[error("invalid dice set: {0}")]
    InvalidDice(String),

    #[error("move precondition failed: {0}")]
    Precondition(String),

    #[error("{0}")]
    Domain(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("cache file: {0}")]
    Cache(String),

    #[error("integrity check failed: {0}")]
    Integrity(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
