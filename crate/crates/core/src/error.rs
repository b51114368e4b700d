use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter or input value lies outside its admissible domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// The caller combined arguments in an unsupported way.
    #[error("usage error: {0}")]
    Usage(String),
    /// A numerical routine failed to produce a finite answer.
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// An iterative estimator stopped before convergence; `best` holds the
    /// best parameter vector seen.
    #[error("no convergence: {message}")]
    Convergence { message: String, best: Vec<f64> },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    /// Design columns are linearly dependent.
    #[error("collinear columns: {}", .0.join(", "))]
    Collinear(Vec<String>),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Usage(msg.into()))
}
