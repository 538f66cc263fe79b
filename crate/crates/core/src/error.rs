use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the modeling, optimization and harness layers.
#[derive(Debug, Error)]
pub enum RcaError {
    /// An input fell outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A linear system was singular or too ill-conditioned to trust.
    #[error("numerical error: {message} (condition estimate {condition:.3e})")]
    Numerical { message: String, condition: f64 },

    /// The impedance data produced a physically impossible quantity.
    #[error("model violation: {0}")]
    ModelViolation(String),

    /// The configuration cannot be simulated as requested.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = RcaError> = std::result::Result<T, E>;

impl RcaError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        RcaError::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        RcaError::Config(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        RcaError::Io {
            path: path.into(),
            source,
        }
    }
}
