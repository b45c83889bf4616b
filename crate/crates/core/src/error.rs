use thiserror::Error;

/// Error type shared across the crate.
///
/// `Domain` marks mathematically invalid arguments (e.g. a Hurst index
/// outside (0,1)), `Invalid` marks structurally invalid inputs
/// (mismatched grids, bad configuration), and `Numerical` marks runtime
/// numerical failures (indefinite covariance, non-converging quadrature).
/// The CLI maps `Domain`/`Invalid` to exit code 2 and `Numerical` to 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}
