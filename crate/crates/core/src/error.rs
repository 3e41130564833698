use thiserror::Error;

/// Library-wide error type.
///
/// The CLI maps these onto its exit-code contract: validation and parse
/// problems exit 2, solver failures exit 3, nonconvergence exits 4.
#[derive(Debug, Error)]
pub enum Error {
    #[error("validation failed:\n{}", .0.join("\n"))]
    Validation(Vec<String>),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("nonconvergence: {0}")]
    NonConvergence(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
