use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("index out of range: {0}")]
    Index(String),
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("degenerate normalization: {0}")]
    Degenerate(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("correlation matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("invalid correlation matrix: {0}")]
    InvalidMatrix(String),
    #[error("sample {index}: {msg}")]
    Sample { index: usize, msg: String },
    #[error("evaluation failed at {abscissa}: {source}")]
    AtPoint { abscissa: f64, source: Box<Error> },
    #[error("i/o error: {0}")]
    Io(String),
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
