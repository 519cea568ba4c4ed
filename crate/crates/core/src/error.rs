//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("unknown base function id `{0}`")]
    UnknownBase(String),

    #[error("empty sample requested")]
    EmptySample,

    #[error("surrogate model has an empty archive")]
    ModelUnbuilt,

    #[error("surrogate model needs at least {needed} archive entries, found {found}")]
    ArchiveTooSmall { needed: usize, found: usize },

    #[error("all sampled values of objective {objective} are identical for `{problem}`")]
    FlatObjective { problem: String, objective: usize },

    #[error("degenerate anchors: nadir must exceed ideal in every objective")]
    DegenerateAnchors,

    #[error("snapshot too small: need at least {needed} points, found {found}")]
    SnapshotTooSmall { needed: usize, found: usize },

    #[error("every feature column contains missing values")]
    DegenerateFeatureMatrix,

    #[error("dataset too small: {0} rows")]
    SampleTooSmall(usize),

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("zero-variance target: {0}")]
    ZeroVarianceTarget(String),

    #[error("join failed, missing rows for: {0}")]
    JoinError(String),

    #[error("result store: {0}")]
    Store(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
