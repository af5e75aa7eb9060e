use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid state space: {0}")]
    InvalidSpace(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid generator: {0}")]
    InvalidGenerator(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("factor index {index} out of range for a space with {count} factors")]
    FactorOutOfRange { index: usize, count: usize },

    #[error("state {state} out of range for a space of size {size}")]
    StateOutOfRange { state: usize, size: usize },

    #[error("invalid time: {0}")]
    InvalidTime(String),

    #[error("unknown generator family `{0}`")]
    UnknownFamily(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("conditioning event has probability {0:e}, at or below the reachability floor")]
    UndefinedEvent(f64),

    #[error("linear program solver failure: {0}")]
    Solver(String),
}

pub type Result<T> = std::result::Result<T, Error>;
