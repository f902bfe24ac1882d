use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("index out of range: {0}")]
    Index(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("infeasible power profile: {0}")]
    Infeasible(String),
    #[error("no contraction certificate: spectral radius {0} is not below 1")]
    NotContractive(f64),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
