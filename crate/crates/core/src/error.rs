use std::io;

use thiserror::Error;

use crate::types::Year;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("duplicate field id `{0}`")]
    DuplicateId(String),

    #[error("unknown root field id `{0}`")]
    UnknownRoot(String),

    #[error("unknown field id `{0}`")]
    UnknownField(String),

    #[error("year {year} outside horizon {start}..={end}")]
    OutOfHorizon { year: Year, start: Year, end: Year },

    #[error("invalid split manifest: {0}")]
    InvalidManifest(String),

    #[error("temporal leakage: interaction at {found} not strictly before {query}")]
    TemporalLeakage { found: Year, query: Year },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("missing embedding for key `{0}`")]
    MissingKey(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn parse(source_name: &str, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            source_name: source_name.to_string(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidArgument(message.into())
    }

    /// True for failures caused by numerics (divergence, non-finite values)
    /// rather than by malformed data or arguments.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::NonFinite(_))
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
        Error::Parse {
            source_name: "csv".to_string(),
            line,
            message: e.to_string(),
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse {
            source_name: "json".to_string(),
            line: e.line(),
            message: e.to_string(),
        }
    }
}
