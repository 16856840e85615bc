use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error("data-quality error: {0}")]
    DataQuality(String),

    #[error("domain error at index {index}: {message}")]
    Domain { index: usize, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("size error: need at least {needed} samples, got {available}")]
    Size { needed: usize, available: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("degenerate objective: {0}")]
    Degenerate(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
