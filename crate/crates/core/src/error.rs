use thiserror::Error;

/// Errors raised by every computation in the crate.
///
/// The variants map one-to-one onto the CLI exit codes and the FFI status
/// codes (see [`Error::exit_code`]).
#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the mathematical domain of the operation
    /// (symbol not in the alphabet, dimension mismatch, invalid PFA, ...).
    #[error("domain error: {0}")]
    Domain(String),
    /// A guard on enumeration size, walk length or memory was exceeded.
    #[error("resource guard exceeded: {0}")]
    Resource(String),
    /// Ill-conditioned input or a numerical routine that failed to converge.
    #[error("numeric error: {0}")]
    Numeric(String),
    /// Malformed input file.
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn resource(msg: impl Into<String>) -> Self {
        Error::Resource(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    pub fn parse(msg: impl Into<String>) -> Self {
        Error::Parse(msg.into())
    }

    /// Process exit code used by the CLI: 2 domain, 3 resource, 4 numeric.
    /// Parse and I/O failures are reported as domain errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_) | Error::Parse(_) | Error::Io(_) => 2,
            Error::Resource(_) => 3,
            Error::Numeric(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
