use std::path::PathBuf;
use std::time::Duration;

use thiserror::Error;

/// Errors produced anywhere in the harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("mask is empty")]
    EmptyMask,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("invalid IoU threshold {0}: must be >= 0.5 for a unique matching")]
    InvalidThreshold(f64),

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("adapter failed ({status}): {stderr}")]
    AdapterFailed { status: String, stderr: String },

    #[error("adapter timed out after {0:?}")]
    AdapterTimeout(Duration),

    #[error("adapter protocol violation: {0}")]
    ProtocolViolation(String),

    #[error("manifest validation failed:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image codec error: {0}")]
    Image(#[from] image::ImageError),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn dims(expected: (usize, usize), found: (usize, usize)) -> Self {
        Error::DimensionMismatch {
            expected: format!("{}x{}", expected.0, expected.1),
            found: format!("{}x{}", found.0, found.1),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
