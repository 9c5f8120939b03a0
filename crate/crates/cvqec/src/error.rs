use thiserror::Error;

/// Errors surfaced by state constructors, channels and protocols.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("mode index {mode} out of range for {num_modes}-mode state")]
    ModeOutOfRange { mode: usize, num_modes: usize },
    #[error("beam splitter requires two distinct modes, got {0} twice")]
    SameMode(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("unphysical squeezer: squeeze {squeeze_db} dB with antisqueeze {antisqueeze_db} dB has variance product {product} < 1")]
    UnphysicalSqueezing {
        squeeze_db: f64,
        antisqueeze_db: f64,
        product: f64,
    },
    #[error("parameter `{name}` = {value} outside [{min}, {max}]")]
    ParameterRange {
        name: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("mixture has zero total mass")]
    EmptyMixture,
    #[error("deterministic correction handles at most one erasure, pattern has {0}")]
    TooManyErasures(usize),
    #[error("matrix is not Hermitian: max asymmetry {0:.3e}")]
    NonHermitian(f64),
    #[error("no samples provided for reconstruction")]
    NoSamples,
}

pub type Result<T> = std::result::Result<T, Error>;
