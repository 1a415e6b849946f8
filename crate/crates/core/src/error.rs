use thiserror::Error;

/// Errors produced by the core library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("price {value} at index {index} lies outside the price bounds")]
    OutOfBounds { index: usize, value: f64 },

    #[error("instance has no prices")]
    EmptyInstance,

    #[error("invalid price bounds: lower={lower}, upper={upper}")]
    InvalidBounds { lower: f64, upper: f64 },

    #[error("algorithm profit must be positive, got {0}")]
    NonPositiveProfit(f64),

    #[error("argument outside the domain: {0}")]
    Domain(String),

    #[error("prediction {0} lies outside the price bounds")]
    PredictionOutOfBounds(f64),

    #[error("root finder could not bracket a solution: {0}")]
    NoRoot(String),

    #[error("breakpoints out of order: {0}")]
    OrderingViolation(String),

    #[error("malformed partition: {0}")]
    BadPartition(String),

    #[error("reward {value} for arm {arm} is outside [0, 1]")]
    BadReward { arm: usize, value: f64 },

    #[error("invalid threshold: {0}")]
    InvalidThreshold(String),

    #[error("invalid learner state: {0}")]
    InvalidState(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
