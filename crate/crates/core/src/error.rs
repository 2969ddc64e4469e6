use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Slope of a regression with no variation in the regressor.
    #[error("undefined slope: {0}")]
    UndefinedSlope(String),

    /// Observation excluded from log analyses (non-positive price impact).
    #[error("excluded observation: {0}")]
    Excluded(String),

    #[error("singular design: {0}")]
    Singular(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
