use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum IlcError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("signal lives in the {found} space, expected the {expected} space")]
    Space {
        expected: &'static str,
        found: &'static str,
    },

    #[error("invalid state-space model: {0}")]
    InvalidModel(String),

    #[error("lifting produced non-finite Markov parameters at lag {lag}")]
    NonFiniteMarkov { lag: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = IlcError> = std::result::Result<T, E>;
