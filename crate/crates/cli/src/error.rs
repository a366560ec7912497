use std::path::Path;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] framekit::Error),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("missing required option --{0}")]
    Missing(&'static str),
    #[error("bad predictions file {path}: {source}")]
    Predictions {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("server failed: {0}")]
    Serve(std::io::Error),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.kind(),
            CliError::Io { .. } => "io",
            CliError::Config(_) | CliError::Missing(_) => "config",
            CliError::Predictions { .. } => "parse",
            CliError::Serve(_) => "serve",
        }
    }
}

/// Error document written to stderr.
#[derive(Serialize)]
pub struct ErrorReport<'a> {
    pub error: &'a str,
    pub message: String,
}

/// Lifts any library error into [`CliError`].
pub fn core<E: Into<framekit::Error>>(e: E) -> CliError {
    CliError::Core(e.into())
}
