//! Error types shared across the crate.

use thiserror::Error;

/// Errors raised by tensor construction, tape operations and the optimizer.
#[derive(Debug, Error)]
pub enum TensorError {
    #[error("shape {shape:?} does not match data length {len}")]
    ShapeDataMismatch { shape: Vec<usize>, len: usize },

    #[error("rows of unequal length passed to from_rows")]
    RaggedRows,

    #[error("expected rank-{expected} tensor, got shape {got:?}")]
    RankMismatch { expected: usize, got: Vec<usize> },

    #[error("{op}: incompatible shapes {lhs:?} and {rhs:?}")]
    ShapeMismatch {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },

    #[error("{op}: invalid dimension ({detail})")]
    InvalidDim { op: &'static str, detail: String },

    #[error("{op}: non-finite value in input")]
    NonFinite { op: &'static str },

    #[error("gather_rows: row id {id} out of range for table with {rows} rows")]
    IndexOutOfRange { id: usize, rows: usize },

    #[error("backward requires a scalar loss, got shape {shape:?}")]
    NonScalarLoss { shape: Vec<usize> },

    #[error("backward requires a tape-tracked loss tensor")]
    UntrackedLoss,

    #[error("missing gradient for parameter '{name}'")]
    MissingGradient { name: String },

    #[error("optimizer state shape mismatch for parameter '{name}'")]
    StateShapeMismatch { name: String },

    #[error("row {row} has zero norm and cannot be normalized")]
    ZeroNormRow { row: usize },
}

/// Errors raised by interaction-file loading and dataset assembly.
#[derive(Debug, Error)]
pub enum DataError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: expected at least 2 whitespace-separated tokens, got {tokens}")]
    MalformedLine { line: usize, tokens: usize },

    #[error("no interactions found in input")]
    EmptyDataset,

    #[error("split ratio must lie in (0, 1), got {ratio}")]
    BadSplitRatio { ratio: f64 },

    #[error("adjacency requires at least one training edge")]
    NoTrainEdges,

    #[error("user {user} interacts with every item; cannot sample a negative")]
    NoNegativeAvailable { user: usize },
}

/// Errors raised by configuration parsing and validation.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("failed to read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("config line {line}: expected 'key = value'")]
    MalformedLine { line: usize },

    #[error("unknown config key '{key}'")]
    UnknownKey { key: String },

    #[error("invalid value '{value}' for key '{key}': {detail}")]
    BadValue {
        key: String,
        value: String,
        detail: String,
    },
}

/// Errors raised by checkpoint serialization.
#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("failed to access checkpoint {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("checkpoint encode/decode failed: {0}")]
    Serde(#[from] serde_json::Error),

    #[error("unsupported checkpoint format/version: {found}")]
    BadVersion { found: String },

    #[error("checkpoint incompatible with dataset: {detail}")]
    Incompatible { detail: String },

    #[error("checkpoint missing parameter '{name}'")]
    MissingParam { name: String },
}

/// Errors raised by the training loop.
#[derive(Debug, Error)]
pub enum TrainError {
    #[error("non-finite {loss_name} loss at epoch {epoch}; training aborted")]
    NonFiniteLoss { loss_name: &'static str, epoch: usize },

    #[error(transparent)]
    Tensor(#[from] TensorError),

    #[error(transparent)]
    Data(#[from] DataError),
}

/// Top-level error for CLI entry points.
#[derive(Debug, Error)]
pub enum DgclError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
