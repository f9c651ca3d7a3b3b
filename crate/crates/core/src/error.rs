use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// An inner or outer solver could not produce a usable answer.
    #[error("solver failure: {0}")]
    Solver(String),

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error on {}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// Wraps a solver error with the context of the outer iterate.
    pub(crate) fn with_context(self, ctx: impl std::fmt::Display) -> Self {
        match self {
            Error::Solver(msg) => Error::Solver(format!("{ctx}: {msg}")),
            Error::Domain(msg) => Error::Solver(format!("{ctx}: domain error: {msg}")),
            other => other,
        }
    }
}
