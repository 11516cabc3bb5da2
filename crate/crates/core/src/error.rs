//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A record violated the `EcgRecord` invariants (lead count, lengths, rate).
    #[error("invalid record: {0}")]
    InvalidRecord(String),

    /// Tensor or layer shapes do not line up.
    #[error("shape error: {0}")]
    Shape(String),

    /// A checkpoint file is damaged or truncated.
    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),

    /// A checkpoint was written by an incompatible format version.
    #[error("unsupported checkpoint version: {0}")]
    UnsupportedVersion(String),

    /// Dataset split request cannot be satisfied.
    #[error("invalid split: {0}")]
    InvalidSplit(String),

    /// A data file failed to parse; carries file context and 1-based row where known.
    #[error("parse error in {file} (row {row}): {message}")]
    Parse {
        file: String,
        row: usize,
        message: String,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
