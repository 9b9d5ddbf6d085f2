use thiserror::Error;

/// Errors raised by the detection pipeline and its building blocks.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("matrix is not square ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("stream of {len} samples is too short for two windows of {window_k}")]
    WindowTooLarge { len: usize, window_k: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("training loss became non-finite at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },

    #[error("onset {onset} lies outside the evaluated range [{first}, {last}]")]
    OnsetOutOfRange { onset: usize, first: usize, last: usize },

    #[error("ROC needs at least one positive and one negative index ({positives} / {negatives})")]
    DegenerateLabels { positives: usize, negatives: usize },

    #[error("seed {seed}: only {kept} samples survive editing, need at least {needed}")]
    InsufficientSamples { seed: u64, kept: usize, needed: usize },

    #[error("model required for mode {0}")]
    MissingModel(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
