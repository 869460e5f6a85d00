use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("design space needs at least {m} points, got {n}")]
    TooFewPoints { n: usize, m: usize },

    #[error("design space is empty")]
    EmptySpace,

    #[error("point {index} has {found} coordinates, expected {expected}")]
    DimensionMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },

    #[error("point {index}, coordinate {coord} is not finite")]
    NonFinite { index: usize, coord: usize },

    #[error("design matrix has rank {rank} < {m} columns")]
    RankDeficient { rank: usize, m: usize },

    #[error("{path}: row {row} has {found} fields, expected {expected}")]
    RaggedRow {
        path: PathBuf,
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("{path}: row {row}, column {col}: cannot parse {value:?} as a finite number")]
    BadCell {
        path: PathBuf,
        row: usize,
        col: usize,
        value: String,
    },

    #[error("{path}: no data rows")]
    EmptyFile { path: PathBuf },

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("information matrix is singular (pivot {pivot} below floor {floor})")]
    SingularInformation { pivot: f64, floor: f64 },

    #[error("no nonsingular starting design found after {attempts} attempts")]
    DegenerateStart { attempts: usize },

    #[error("log-determinant decreased at iteration {iteration}: {before} -> {after}")]
    MonotonicityViolation {
        iteration: usize,
        before: f64,
        after: f64,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
