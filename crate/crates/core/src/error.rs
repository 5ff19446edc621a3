use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },
    #[error("invalid mesh: {kind} at {simplex}")]
    Validation { simplex: String, kind: String },
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    #[error("singular evaluation: {0}")]
    Singularity(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("config error at `{field}`: {msg}")]
    Config { field: String, msg: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<String>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }

    pub(crate) fn validation(simplex: impl Into<String>, kind: impl Into<String>) -> Self {
        Error::Validation {
            simplex: simplex.into(),
            kind: kind.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
