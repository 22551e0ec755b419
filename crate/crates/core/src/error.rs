use std::path::PathBuf;

use thiserror::Error;

/// Errors produced across the crate.
#[derive(Debug, Error)]
pub enum ArfError {
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("cannot take argmax of an empty score vector")]
    EmptyScores,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("forest has {count} nodes but the 16-bit layout holds at most {limit}")]
    TooManyNodes { count: usize, limit: usize },

    #[error("invalid forest: {0}")]
    InvalidForest(String),

    #[error("structural error in quantized forest: {0}")]
    Structural(String),

    #[error("{operation} requires {required} classes, forest has {got}")]
    UnsupportedClassCount {
        operation: &'static str,
        required: &'static str,
        got: usize,
    },

    #[error("invalid policy: {0}")]
    InvalidPolicy(String),

    #[error("{path}: row {row}, column {col}: {msg}")]
    Parse {
        path: PathBuf,
        row: usize,
        col: usize,
        msg: String,
    },

    #[error("unknown format `{0}` (expected csv, json or table)")]
    UnknownFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = ArfError> = std::result::Result<T, E>;
