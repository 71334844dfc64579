use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = AscError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum AscError {
    #[error("shape mismatch: expected {expected}, got {actual}")]
    Shape { expected: String, actual: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("coordinate ({row}, {col}) is outside a {height}x{width} canvas")]
    OutOfRange {
        row: usize,
        col: usize,
        height: usize,
        width: usize,
    },

    #[error("cannot read {path}: {source}")]
    Unreadable {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot write {path}: {source}")]
    Unwritable {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed input {path}: {reason}")]
    Malformed { path: PathBuf, reason: String },

    #[error("unsupported bit depth in {path}: {detail}")]
    UnsupportedBitDepth { path: PathBuf, detail: String },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl AscError {
    pub(crate) fn shape(expected: impl ToString, actual: impl ToString) -> Self {
        AscError::Shape {
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        AscError::InvalidArgument(msg.into())
    }

    /// True for failures that come from the filesystem rather than from
    /// bad arguments or data.
    pub fn is_io(&self) -> bool {
        matches!(
            self,
            AscError::Unreadable { .. }
                | AscError::Unwritable { .. }
                | AscError::Malformed { .. }
                | AscError::UnsupportedBitDepth { .. }
        )
    }
}
