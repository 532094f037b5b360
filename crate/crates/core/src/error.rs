use std::path::PathBuf;

use thiserror::Error;

/// Coarse classification used by callers that map failures to process exit
/// codes: bad inputs vs. failures during an otherwise valid run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Runtime,
}

/// Error type shared by every module in this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{0}")]
    Validation(String),

    #[error("model file error: {0}")]
    ModelFile(String),

    /// Non-finite value produced while updating a document posterior.
    #[error("document {doc_id}, token {token}: non-finite value in {context}")]
    NonFinite {
        doc_id: String,
        token: usize,
        context: String,
    },

    #[error("ELBO term `{term}` is non-finite")]
    NonFiniteElbo { term: String },

    /// Smoothed moments no longer match the chain's variational observations.
    #[error("stale smoothed moments: chain state changed since last refresh")]
    StaleMoments,

    #[error("could not separate specific topics")]
    TopicSeparation,

    #[error("document too short to split: {0}")]
    TooShortToSplit(String),

    #[error("{0}")]
    Diagnostics(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Parse { .. }
            | Error::Validation(_)
            | Error::ModelFile(_)
            | Error::TooShortToSplit(_)
            | Error::Diagnostics(_) => ErrorKind::Validation,
            Error::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => {
                ErrorKind::Validation
            }
            Error::Io { .. }
            | Error::NonFinite { .. }
            | Error::NonFiniteElbo { .. }
            | Error::StaleMoments
            | Error::TopicSeparation => ErrorKind::Runtime,
        }
    }

    /// Wraps an I/O failure with the path it occurred on.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
