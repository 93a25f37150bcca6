use std::io;
use std::path::PathBuf;

use geoflow::FlowError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    /// The config file could not be parsed; `key` names the offending entry.
    #[error("config error at line {line}, key `{key}`: {message}")]
    Config { line: usize, key: String, message: String },

    #[error("flow error: {0}")]
    Flow(#[from] FlowError),

    #[error("corrupt track {path}: {message}")]
    CorruptTrack { path: PathBuf, message: String },

    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn config(line: usize, key: &str, message: impl Into<String>) -> Self {
        CliError::Config { line, key: key.to_string(), message: message.into() }
    }

    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// 0 success, 1 usage or config, 2 runtime flow error, 3 corrupt input.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config { .. } => 1,
            CliError::Flow(_) | CliError::Io { .. } | CliError::Csv(_) | CliError::Json(_) => 2,
            CliError::CorruptTrack { .. } => 3,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
