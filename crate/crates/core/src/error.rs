use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid dimensions: {0}")]
    InvalidDims(String),
    #[error("path {path}: {what}")]
    TapOutOfRange { path: usize, what: String },
    #[error("band overflow: tap offset {offset} exceeds declared half bandwidth {half_bandwidth}")]
    BandOverflow { offset: usize, half_bandwidth: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("ill-conditioned band factorization: pivot {pivot:e} at row {row}")]
    IllConditioned { row: usize, pivot: f64 },
    #[error("matrix of dimension {n} exceeds the dense oracle cap {cap}")]
    OracleCap { n: usize, cap: usize },
    #[error("singular matrix in dense inversion")]
    Singular,
    #[error("level {0} is not an output level of the quantizer")]
    UnknownLevel(f64),
    #[error("non-finite message in {block} block at iteration {iter}")]
    NonFinite { block: &'static str, iter: usize },
    #[error("internal consistency failure: {0}")]
    Internal(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
