use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {context}: expected {expected}, got {actual}")]
    Shape {
        context: &'static str,
        expected: String,
        actual: String,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("degenerate input: {0}")]
    Degenerate(&'static str),

    #[error("data leakage: {0}")]
    Leakage(String),

    #[error("malformed data: {0}")]
    Data(String),

    #[error("model file: {0}")]
    Format(String),

    #[error("{path}: {reason}")]
    Io { path: PathBuf, reason: std::io::Error },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

impl Error {
    pub(crate) fn shape(context: &'static str, expected: impl ToString, actual: impl ToString) -> Self {
        Error::Shape {
            context,
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), reason: source }
    }
}
