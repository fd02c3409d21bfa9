//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on operation inputs was violated.
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// A matrix factorization or other numeric kernel failed.
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// An iterative solver exhausted its budget.
    #[error("no convergence: {0}")]
    NonConvergence(String),
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    /// A file could not be decoded (wrong magic, version or payload).
    #[error("decode failure: {0}")]
    Decode(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Decode(e.to_string())
    }
}
