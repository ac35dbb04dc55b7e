use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Malformed design, dataset or configuration.
    #[error("validation error: {0}")]
    Validation(String),

    /// A usage combination with no defined procedure (e.g. VCA with EER).
    #[error("usage error: {0}")]
    Usage(String),

    /// The data cannot support the requested statistic (zero variances, zero PSE, ...).
    #[error("degenerate data: {0}")]
    Degenerate(String),

    /// A covariance matrix is not square or is indefinite beyond tolerance.
    #[error("matrix error: {0}")]
    Matrix(String),

    /// An object was used before it was in a usable state.
    #[error("state error: {0}")]
    State(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Process exit code: 2 usage/validation, 3 degenerate data, 4 internal numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_)
            | Error::Validation(_)
            | Error::Usage(_)
            | Error::Parse { .. }
            | Error::Io(_) => 2,
            Error::Degenerate(_) => 3,
            Error::Matrix(_) | Error::State(_) => 4,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
        Error::Parse { line, msg: e.to_string() }
    }
}
