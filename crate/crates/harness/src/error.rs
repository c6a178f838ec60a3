use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, HarnessError>;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: column '{column}' not found in header")]
    MissingColumn { path: PathBuf, column: String },
    #[error("{path}: row {row}, column '{column}': cannot parse '{value}' as a number")]
    Parse {
        path: PathBuf,
        row: usize,
        column: String,
        value: String,
    },
    #[error("config: {0}")]
    Config(String),
    #[error("unknown method '{name}'; valid methods are {valid}")]
    UnknownMethod { name: String, valid: String },
    #[error("replicate seed {seed}: non-finite {what} at {step}")]
    NonFinite { seed: u64, step: String, what: String },
    #[error("replicate seed {seed}: {step}: {source}")]
    Step {
        seed: u64,
        step: String,
        #[source]
        source: streamgp_core::Error,
    },
    #[error("checkpoint line {line}: {msg}")]
    Checkpoint { line: usize, msg: String },
    #[error(transparent)]
    Core(#[from] streamgp_core::Error),
}

impl HarnessError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }
}
