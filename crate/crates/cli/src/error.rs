use std::path::{Path, PathBuf};

use thiserror::Error;

/// Failures surfaced by the command-line front end, each with an exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("no detection: {0}")]
    NoDetection(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) | CliError::Parse { .. } => 2,
            CliError::NoDetection(_) => 3,
            CliError::Io { .. } => 1,
        }
    }

    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }
}

impl From<spikesep::Error> for CliError {
    fn from(e: spikesep::Error) -> Self {
        match e {
            spikesep::Error::NoDetection(m) => CliError::NoDetection(m),
            other => CliError::Validation(other.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
