use thiserror::Error;

/// Errors raised by the library. Configuration problems are separated from
/// domain violations (bad arguments to a formula) and numeric failures so the
/// command line can map them onto distinct exit codes.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn config<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Config(msg.into()))
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

impl Error {
    /// The message without its category prefix.
    pub fn message(&self) -> &str {
        match self {
            Error::Config(m) | Error::Domain(m) | Error::Numeric(m) => m,
        }
    }
}
