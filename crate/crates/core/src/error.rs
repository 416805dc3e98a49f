use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the uncertain shapelet transform library.
#[derive(Debug, Error)]
pub enum UstError {
    #[error("numeric overflow: {0} produced a non-finite result")]
    NumericOverflow(&'static str),

    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("unsupported exponent {0}: only n >= 1 is supported")]
    UnsupportedExponent(i32),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("shape mismatch between {values} and {uncertainty}: {message}")]
    ShapeMismatch {
        values: PathBuf,
        uncertainty: PathBuf,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: invalid JSON: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid data: {0}")]
    InvalidData(String),
}

impl UstError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        UstError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, UstError>;
