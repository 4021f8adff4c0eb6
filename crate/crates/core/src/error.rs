use thiserror::Error;

/// Errors shared by every subsystem of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid matrix structure: {0}")]
    Structure(String),
    #[error("non-finite value at flat index {0}")]
    NonFinite(usize),
    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },
    #[error("{what} too large: limit {limit}, got {got}")]
    TooLarge {
        what: &'static str,
        limit: usize,
        got: usize,
    },
    #[error("non-positive sampling probability at row {index}")]
    NonPositiveProbability { index: usize },
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("gaussian budget exhausted after {served} queries")]
    GaussianBudget { served: usize },
    #[error("partial coloring exhausted {retries} retries in outer round {round}")]
    RetriesExhausted { round: usize, retries: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
