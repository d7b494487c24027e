use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("degenerate configuration: {0}")]
    Degenerate(String),
    #[error("singular point: {0}")]
    Singular(String),
    #[error("quadrature did not converge (estimate {estimate:e}, error {error:e})")]
    Convergence { estimate: f64, error: f64 },
    #[error("sampling budget exhausted after {attempts} proposals")]
    Sampling { attempts: u64 },
    #[error("overflow: {0}")]
    Overflow(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn argument(msg: impl Into<String>) -> Error {
    Error::Argument(msg.into())
}
