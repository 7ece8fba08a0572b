use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value {0} cannot be quantized")]
    NonFinite(f64),

    #[error("invalid fixed-point format: {0}")]
    InvalidFormat(String),

    #[error("invalid network config: {0}")]
    InvalidConfig(String),

    #[error("invalid layer stack: {0}")]
    InvalidStack(String),

    #[error("sequence too short: {len} steps, need at least {needed}")]
    SequenceTooShort { len: usize, needed: usize },

    #[error("channel mismatch: expected {expected}, got {actual}")]
    ChannelMismatch { expected: usize, actual: usize },

    #[error("shape mismatch for {what}: expected {expected}, got {actual}")]
    Shape {
        what: String,
        expected: usize,
        actual: usize,
    },

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("target dimension {dim} has zero variance")]
    ZeroVariance { dim: usize },

    /// `row` and `col` are zero-based; the message counts from one.
    #[error("row {}, column {}: {msg}", .row + 1, .col + 1)]
    Ingest { row: usize, col: usize, msg: String },

    #[error("bad file format: {0}")]
    Format(String),

    #[error("config parse error: {0}")]
    ConfigParse(#[from] toml::de::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] io::Error),
}
