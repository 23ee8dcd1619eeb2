use thiserror::Error;

/// Errors raised by the numerical pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("image must have at least one pixel (got {width}x{height})")]
    EmptyImage { width: usize, height: usize },

    #[error("expected {expected} values for a {width}x{height} image, got {actual}")]
    DataLength {
        width: usize,
        height: usize,
        expected: usize,
        actual: usize,
    },

    #[error("channel value {value} at index {index} is outside [0, 1]")]
    ChannelOutOfRange { index: usize, value: f64 },

    #[error("{what} contains a non-finite value at index {index}")]
    NonFinite { what: &'static str, index: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("sigma must be positive and finite, got {0}")]
    InvalidSigma(f64),

    #[error("division guard must be positive and finite, got {0}")]
    InvalidGuard(f64),

    #[error("temperature must be positive and finite, got {0}")]
    InvalidTemperature(f64),

    #[error("entropic regularization must be positive and finite, got {0}")]
    InvalidEpsilon(f64),

    #[error("tolerance must be positive and finite, got {0}")]
    InvalidTolerance(f64),

    #[error("transport block must be at least 2x2, got {0}x{0}")]
    BlockTooSmall(usize),

    #[error("weights length {weights} does not match negatives length {negatives}")]
    WeightCount { weights: usize, negatives: usize },

    #[error("negative weight {0} is not allowed")]
    NegativeWeight(f64),

    #[error("region mismatch: {0}")]
    RegionMismatch(String),

    #[error("feature grid incompatible with label map: {0}")]
    GridMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
