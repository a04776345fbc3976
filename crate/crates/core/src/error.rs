use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point set is empty")]
    EmptyPointSet,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite coordinate at point {index}")]
    NonFiniteCoordinate { index: usize },
    #[error("k = {k} out of range [1, {n}]")]
    KOutOfRange { k: usize, n: usize },
    #[error("response {value} at index {index} outside [0, 1]")]
    InvalidResponse { index: usize, value: f64 },
    #[error("label {value} at index {index} is not binary")]
    NonBinaryLabel { index: usize, value: f64 },
    #[error("{points} points but {responses} responses")]
    LengthMismatch { points: usize, responses: usize },
    #[error("invalid noise rates ({p0}, {p1}): {reason}")]
    InvalidRates { p0: f64, p1: f64, reason: &'static str },
    #[error("degenerate rate estimates: 1 - p0 - p1 = {denominator} is not above the guard")]
    DegenerateRates { denominator: f64 },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("malformed input: {0}")]
    Parse(String),
    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
