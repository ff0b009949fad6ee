use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed binary container, with the byte offset where parsing stopped.
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: u64, message: String },

    /// Malformed text input (annotation files, masks, reports).
    #[error("format error: {0}")]
    Format(String),

    /// Inconsistent or invalid user configuration.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("unsupported sampling rate {fs} Hz (minimum {min} Hz)")]
    UnsupportedRate { fs: f64, min: f64 },

    #[error("length mismatch: {what} ({left} vs {right})")]
    LengthMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite sample in epoch {epoch} of channel {channel}")]
    NonFinite { channel: usize, epoch: usize },

    #[error("feature '{0}' has zero standard deviation in the training data")]
    ZeroVariance(&'static str),

    #[error("single-class training data: {0}")]
    SingleClass(String),

    #[error("SMO did not converge after {iterations} iterations (KKT residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("feature version mismatch: model has '{model}', data has '{data}'")]
    VersionMismatch { model: String, data: String },

    /// Statistic not defined on the given data, e.g. AUC without seizures.
    #[error("undefined statistic: {0}")]
    Undefined(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Errors caused by bad user input rather than a runtime failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::Format(_)
                | Error::Parse { .. }
                | Error::VersionMismatch { .. }
                | Error::UnsupportedRate { .. }
                | Error::InvalidInput(_)
        )
    }
}
