use std::path::PathBuf;

use scalar_probe_core::{BackendError, CorpusError, ProbeError};

/// Errors surfaced by loaders, the runner and the CLI.
#[derive(Debug, thiserror::Error)]
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
    #[error("{path}: {source}")]
    Corpus {
        path: PathBuf,
        #[source]
        source: CorpusError,
    },
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Probe(#[from] ProbeError),
    #[error("backend: {0}")]
    Backend(#[from] BackendError),
    #[error("record: {0}")]
    Record(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    /// CLI exit code: 2 for backend failures, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Backend(_) | Error::Probe(ProbeError::Backend(_)) => 2,
            _ => 1,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
