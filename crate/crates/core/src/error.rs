use std::io;

use thiserror::Error;

/// Errors produced anywhere in the snapshot/factorization/ROM pipeline.
#[derive(Debug, Error)]
pub enum RomError {
    #[error("no input columns or chunks were supplied")]
    EmptyInput,
    #[error("row id sets differ: {0}")]
    MismatchedRows(String),
    #[error("parameter value {0} appears more than once")]
    DuplicateParameter(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("i/o failure on {path}: {source}")]
    IoFailure {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("corrupt chunk file: {0}")]
    CorruptHeader(String),
    #[error("non-finite entry encountered in {0}")]
    NonFinite(&'static str),
    #[error("chunk tag {0} supplied more than once")]
    TagCollision(u64),
    #[error("tag mismatch: Q chunk {q_tag} paired with factor for {factor_tag}")]
    TagMismatch { q_tag: u64, factor_tag: u64 },
    #[error("{value} lies outside [{lo}, {hi}]")]
    OutOfDomain { value: f64, lo: f64, hi: f64 },
    #[error("model has no variation threshold; calibrate it first")]
    Uncalibrated,
    #[error("reference solution has zero norm")]
    ZeroTruth,
    #[error("testing site {0} coincides with a training parameter")]
    SiteCollision(f64),
    #[error("no testing columns supplied")]
    EmptyTesting,
    #[error("response-surface site {0} appears more than once")]
    DuplicateSite(f64),
    #[error("parameter grid is not uniform: {0}")]
    NonUniformGrid(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("malformed json in {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

impl RomError {
    /// Stable machine-readable identifier, used by the CLI error line.
    pub fn code(&self) -> &'static str {
        match self {
            RomError::EmptyInput => "EmptyInput",
            RomError::MismatchedRows(_) => "MismatchedRows",
            RomError::DuplicateParameter(_) => "DuplicateParameter",
            RomError::DimensionMismatch(_) => "DimensionMismatch",
            RomError::IoFailure { .. } => "IoFailure",
            RomError::CorruptHeader(_) => "CorruptHeader",
            RomError::NonFinite(_) => "NonFinite",
            RomError::TagCollision(_) => "TagCollision",
            RomError::TagMismatch { .. } => "TagMismatch",
            RomError::OutOfDomain { .. } => "OutOfDomain",
            RomError::Uncalibrated => "Uncalibrated",
            RomError::ZeroTruth => "ZeroTruth",
            RomError::SiteCollision(_) => "SiteCollision",
            RomError::EmptyTesting => "EmptyTesting",
            RomError::DuplicateSite(_) => "DuplicateSite",
            RomError::NonUniformGrid(_) => "NonUniformGrid",
            RomError::InvalidArgument(_) => "InvalidArgument",
            RomError::Json { .. } => "Json",
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: io::Error) -> Self {
        RomError::IoFailure {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub(crate) fn json(path: impl AsRef<std::path::Path>, source: serde_json::Error) -> Self {
        RomError::Json {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, RomError>;
