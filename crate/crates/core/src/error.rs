use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("load error in {file}: {message}")]
    Load { file: String, message: String },

    #[error("validation error in {record}: {message}")]
    Validation { record: String, message: String },

    #[error("network is disconnected; islands: {islands:?}")]
    Disconnected { islands: Vec<Vec<String>> },

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("temporal structure: {0}")]
    Temporal(String),

    #[error("model build error: {0}")]
    Build(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("solver error: {message}")]
    Solver { message: String, log_tail: String },

    #[error("invalid case: {0}")]
    Case(String),

    #[error("oracle refused instance: {0}")]
    Oracle(String),
}

impl Error {
    pub(crate) fn validation(record: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            record: record.into(),
            message: message.into(),
        }
    }

    pub(crate) fn load(file: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Load {
            file: file.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
