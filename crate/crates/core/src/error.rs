use thiserror::Error;

/// Errors raised by curve construction, conversions and the mechanisms.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{name} = {value} is not a probability in [0, 1]")]
    InvalidProbability { name: &'static str, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid tradeoff curve: {0}")]
    InvalidCurve(String),

    #[error("alpha = {0} lies outside [0, 1]")]
    AlphaOutOfRange(f64),

    #[error("infeasible parameter matching: {0}")]
    Infeasible(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_probability(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::InvalidProbability { name, value })
    }
}

macro_rules! ensure_param {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err($crate::error::Error::InvalidParameter(format!($($fmt)+)));
        }
    };
}
pub(crate) use ensure_param;
