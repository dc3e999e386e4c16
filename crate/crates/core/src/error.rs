use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of a physical formula.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    /// A configuration value violates a constraint. `field` names the offending key.
    #[error("invalid configuration: `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("slot index {index} out of range for grid of {len} slots")]
    Bounds { index: usize, len: usize },

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by user-supplied configuration (bad file contents
    /// or violated constraints) as opposed to runtime failures.
    pub fn is_config_error(&self) -> bool {
        matches!(self, Error::Config { .. } | Error::Parse(_))
    }
}
