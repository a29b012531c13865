use thiserror::Error;

/// Errors raised by the numerical routines and the command line front end.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument is outside the domain where the quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// Kernel evaluated on the diagonal `x == y`.
    #[error("singular point: kernel is not defined on the diagonal")]
    SingularPoint,

    /// Quadrature or truncation could not reach the requested tolerance.
    #[error("accuracy error in {what}: estimate {estimate:e} exceeds tolerance {tolerance:e}")]
    Accuracy { what: String, estimate: f64, tolerance: f64 },

    /// The grid is too coarse for the requested ball or truncation radius.
    #[error("resolution error: {0}")]
    Resolution(String),

    /// An input was rejected before any work was done (bad sizes, NaN, ...).
    #[error("rejected input: {0}")]
    RejectedInput(String),

    /// Feature not available for this dimension or configuration.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// Malformed external data; `row` is 1-based and counts the header.
    #[error("ingestion error at row {row}: {message}")]
    Ingestion { row: usize, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn rejected(msg: impl Into<String>) -> Error {
    Error::RejectedInput(msg.into())
}
