use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Parameters outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    #[error("inadmissible eigenvalue: {0}")]
    InadmissibleEigenvalue(String),
    #[error("truncation would drop live mass: {0}")]
    Truncation(String),
    #[error("cache format: {0}")]
    Cache(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Domain-type errors map to CLI exit code 2, everything else to 1.
    pub fn is_domain(&self) -> bool {
        matches!(
            self,
            Error::Domain(_) | Error::InadmissibleEigenvalue(_) | Error::Truncation(_)
        )
    }
}
