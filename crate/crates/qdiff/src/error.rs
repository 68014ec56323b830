use thiserror::Error;

/// Crate-wide error type.
///
/// `Config` covers invalid problem descriptions (bad parameters, illegal
/// scheme/equation pairings, CFL violations); `Numerical` covers failures of
/// the numerical machinery itself (singular systems, iteration caps, size
/// caps). The CLI maps these onto exit codes 1 and 2 respectively.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}
