use thiserror::Error;

/// Errors raised anywhere in the inference stack.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum Error {
    #[error("weight value {0} is not a binary weight (expected -1 or +1)")]
    InvalidWeight(i32),
    #[error("packed weight word {word} has nonzero padding bits ({value:#06x})")]
    CorruptWeightWord { word: usize, value: u16 },
    #[error("not a model image (bad magic)")]
    NotAModelImage,
    #[error("unsupported model image version {0}")]
    UnsupportedVersion(u16),
    #[error("model image truncated: needed {needed} bytes, have {have}")]
    TruncatedImage { needed: usize, have: usize },
    #[error("inconsistent layer dimensions: {0}")]
    InconsistentDims(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("accumulator overflow on neuron {neuron}")]
    AccumulatorOverflow { neuron: usize },
    #[error("protocol violation: {0}")]
    ProtocolViolation(String),
    #[error("not an IDX file of the expected kind (magic {0:#010x})")]
    NotIdx(u32),
    #[error("corrupt dataset: {0}")]
    CorruptDataset(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
