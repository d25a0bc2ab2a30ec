use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration: schedule parameters, target specs, pairings.
    #[error("configuration error: {0}")]
    Config(String),

    /// Invalid call-site argument: step out of range, dimension mismatch.
    #[error("argument error: {0}")]
    Argument(String),

    /// Malformed input file.
    #[error("format error in {path} at byte {offset}: {message}")]
    Format {
        path: PathBuf,
        offset: u64,
        message: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// An experiment ran but one of its checks failed.
    #[error("experiment `{experiment}` violated contract `{check}`: {detail}")]
    Contract {
        experiment: String,
        check: String,
        detail: String,
    },

    /// Failure inside a named experiment.
    #[error("experiment `{experiment}` failed: {source}")]
    Experiment {
        experiment: String,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
