use thiserror::Error;

/// Errors raised by the codec, analyzer, simulator and harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("grid collision: evaluation point z[{z_index}] = {value} coincides with interpolation point alpha[{alpha_index}]")]
    GridCollision {
        z_index: usize,
        alpha_index: usize,
        value: f64,
    },

    #[error("invalid mask shift {shift}: mask points must stay outside [-1, 1]")]
    InvalidShift { shift: f64 },

    #[error("insufficient results: {0}")]
    InsufficientResults(String),

    #[error("degenerate basis weight {weight:e} at z = {z} (column {column})")]
    DegenerateWeight { z: f64, column: usize, weight: f64 },

    #[error("capacity error: {needed} nodes required, {available} available")]
    Capacity { needed: usize, available: usize },

    #[error("incomplete assembly: missing blocks {missing:?}")]
    IncompleteAssembly { missing: Vec<(usize, usize)> },

    #[error("unbounded leakage: {0}")]
    UnboundedLeakage(String),

    #[error("numerical failure: {message} (min eigenvalue {min_eigenvalue:e}, max eigenvalue {max_eigenvalue:e})")]
    NumericalFailure {
        message: String,
        min_eigenvalue: f64,
        max_eigenvalue: f64,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
