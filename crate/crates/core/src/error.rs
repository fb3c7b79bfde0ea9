use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid gamma: {0}")]
    InvalidGamma(String),

    #[error("invalid critical constants: {0}")]
    InvalidConstants(String),

    #[error("length mismatch: {what} has length {got}, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        got: usize,
        expected: usize,
    },

    #[error("p-value at index {index} is {value}, expected a number in [0, 1]")]
    InvalidPValue { index: usize, value: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("truth labels have not been attached to this rejection result")]
    MissingTruth,

    #[error("calibration target {target} is unattainable: C(beta) ranges over [{low}, {high}] on the search bracket")]
    Unattainable { target: f64, low: f64, high: f64 },

    #[error("C(beta) is not monotone: C({beta}) = {value} lies outside [{lower}, {upper}]")]
    NonMonotone {
        beta: f64,
        value: f64,
        lower: f64,
        upper: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
