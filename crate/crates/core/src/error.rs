use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Caller supplied an out-of-range or inconsistent argument.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A rational map or inverse was evaluated at a singular point.
    #[error("numerical domain error: {0}")]
    NumericalDomain(String),

    /// An iterative or numerical procedure failed to produce a usable answer.
    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    /// The request exceeds an enforced size limit.
    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serialization(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::NumericalDomain(msg.into())
    }

    pub(crate) fn failure(msg: impl Into<String>) -> Self {
        Error::NumericalFailure(msg.into())
    }
}
