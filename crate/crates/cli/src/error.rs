use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration or arguments; nothing was written.
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: corrupt artifact: {reason}")]
    Artifact { path: PathBuf, reason: String },
    #[error("{path}: artifact was fitted on a different corpus (fingerprint {expected}, corpus has {actual})")]
    FingerprintMismatch {
        path: PathBuf,
        expected: String,
        actual: String,
    },
    #[error("{context}: {source}")]
    Engine {
        context: String,
        #[source]
        source: aerotopic::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            _ => 2,
        }
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }

    pub fn engine(context: impl Into<String>) -> impl FnOnce(aerotopic::Error) -> CliError {
        let context = context.into();
        move |source| CliError::Engine { context, source }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
