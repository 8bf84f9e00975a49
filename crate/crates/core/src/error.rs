use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numeric failure at step {step}: {message}")]
    Numeric { step: usize, message: String },

    #[error(
        "functional increased at iteration {iteration}: J = {current:.12e} > {previous:.12e} \
         (tolerance {tolerance:e}); reduce the step size or increase alpha"
    )]
    Monotonicity {
        iteration: usize,
        previous: f64,
        current: f64,
        tolerance: f64,
    },

    #[error("phase undefined for register state {index}: overlap magnitude {magnitude:e}")]
    UndefinedPhase { index: usize, magnitude: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
