use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit count mismatch: {0} vs {1}")]
    SizeMismatch(usize, usize),

    #[error("invalid Pauli word {word:?}: {reason}")]
    InvalidWord { word: String, reason: String },

    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("dense evaluation needs {n} qubits but the dense limit is {limit}; use the one-norm mode instead")]
    DenseLimit { n: usize, limit: usize },

    #[error("term budget exceeded: {needed} products requested, budget is {budget}")]
    Budget { needed: usize, budget: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid coloring: {0}")]
    InvalidColoring(String),

    #[error("terms longer than the truncation range: {0}")]
    Untruncated(String),

    #[error("bound is not monotone in r: bound({r_small}) = {v_small} < bound({r_large}) = {v_large}")]
    NotMonotone { r_small: usize, v_small: f64, r_large: usize, v_large: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
