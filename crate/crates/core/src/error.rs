use thiserror::Error;

/// Errors raised across the wildcard toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{what} = {value} is outside its allowed range {range}")]
    OutOfRange {
        what: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("unknown gate label `{0}`")]
    UnknownGate(String),

    #[error("outcome sets differ: {left} vs {right} outcomes")]
    OutcomeMismatch { left: usize, right: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("no prediction for circuit `{0}`")]
    MissingPrediction(String),

    #[error("duplicate circuit `{0}`")]
    DuplicateCircuit(String),

    #[error("germ list contains an empty germ")]
    EmptyGerm,

    #[error("outcome counts are empty (N = 0)")]
    NoCounts,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{what} did not converge: {detail}")]
    NonConvergence { what: &'static str, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
