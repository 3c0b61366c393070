use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: channel count mismatch (expected {expected} channel columns, found {found})")]
    ChannelCountMismatch {
        context: String,
        expected: usize,
        found: usize,
    },

    #[error("{context}: non-monotonic time at data row {row}")]
    NonMonotonicTime { context: String, row: usize },

    #[error("task id {0} outside 0..15")]
    TaskOutOfRange(i64),

    #[error("session too short: {found} samples, need at least {needed}")]
    SessionTooShort { found: usize, needed: usize },

    #[error("{context}: line {line}: {message}")]
    Parse {
        context: String,
        line: usize,
        message: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("bad file format: {0}")]
    Format(String),

    #[error("training data contains a single class")]
    SingleClass,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::InvalidArgument(_))
    }
}
