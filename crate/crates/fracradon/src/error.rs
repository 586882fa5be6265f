use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid quadratic form: {0}")]
    InvalidForm(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("truncation infeasible: radius {radius} exceeds cap {cap}")]
    TruncationInfeasible { radius: usize, cap: usize },
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("inconsistent arc data: {0}")]
    Inconsistent(String),
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("io: {0}")]
    Io(String),
    #[error("invalid config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
