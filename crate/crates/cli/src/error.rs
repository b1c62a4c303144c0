use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Invalid profiles, parameters or attack descriptions.
    #[error(transparent)]
    Input(#[from] sybilproof_core::Error),

    #[error("{0}")]
    Usage(String),

    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Input(_) | CliError::Write { .. } => 3,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
