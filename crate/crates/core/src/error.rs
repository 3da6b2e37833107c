use std::path::PathBuf;

use thiserror::Error;

/// Failure to build a valid configuration.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("invalid value for `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error("schema violation: {0}")]
    Schema(String),
}

impl ConfigError {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        ConfigError::Invalid {
            field,
            reason: reason.into(),
        }
    }
}

/// An analytic threshold or signal level is undefined for the given parameters.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CalibrationError {
    #[error("{quantity} is undefined: {reason}")]
    Invalid {
        quantity: &'static str,
        reason: String,
    },
    #[error("probability {0} outside the open interval (0, 1)")]
    Probability(f64),
}

impl CalibrationError {
    pub(crate) fn invalid(quantity: &'static str, reason: impl Into<String>) -> Self {
        CalibrationError::Invalid {
            quantity,
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Calibration(#[from] CalibrationError),
    #[error("support sets live in different universes ({left} vs {right} rows)")]
    UniverseMismatch { left: usize, right: usize },
    #[error("malformed input: {0}")]
    Input(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
