use std::path::PathBuf;

use thiserror::Error;

use crate::training::CertificationFailure;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("feature index {index} out of range for a model with {features} features")]
    FeatureIndex { index: usize, features: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid constraint set: {0}")]
    Constraint(String),

    #[error("AUC is undefined when only one class is present")]
    SingleClass,

    #[error("feature importance is degenerate: every input gradient is zero")]
    DegenerateImportance,

    #[error(
        "non-finite loss at epoch {epoch} (learning rate {learning_rate}); \
         lower the learning rate or switch to the adam optimizer"
    )]
    NonFiniteLoss { epoch: usize, learning_rate: f64 },

    #[error("{0}")]
    CertificationFailed(Box<CertificationFailure>),

    #[error("data error: {0}")]
    Data(String),

    #[error("schema mismatch: missing columns {missing:?}; available columns {available:?}")]
    Schema {
        missing: Vec<String>,
        available: Vec<String>,
    },

    #[error("model/data mismatch: model expects features {expected:?}, data provides {got:?}")]
    FeatureMismatch {
        expected: Vec<String>,
        got: Vec<String>,
    },

    #[error("snapshot {path}: {reason}")]
    Snapshot { path: PathBuf, reason: String },

    #[error("model file {path}: {reason}")]
    Artifact { path: PathBuf, reason: String },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
