use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at line {line}, column {column}: {message}")]
    Config { line: usize, column: usize, message: String },

    #[error("experiment `{experiment}`: {source}")]
    Core {
        experiment: String,
        #[source]
        source: stlw_core::Error,
    },

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: stlw_core::Error,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Usage(String),
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

/// Attaches the experiment name to core errors.
pub trait Context<T> {
    fn within(self, experiment: &str) -> Result<T>;
}

impl<T> Context<T> for stlw_core::Result<T> {
    fn within(self, experiment: &str) -> Result<T> {
        self.map_err(|source| CliError::Core { experiment: experiment.to_string(), source })
    }
}

pub fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
    let path = path.into();
    move |source| CliError::Io { path, source }
}
