use thiserror::Error;

/// Errors raised by the analysis pipeline.
///
/// `Validation` covers bad inputs (parameters, files, options); every other
/// variant is a numerical failure.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Validation(String),

    #[error("point ({x}, {z}) lies on a fold curve where the reduced flow is singular")]
    SingularPoint { x: f64, z: f64 },

    #[error("root bracketing failed: {0}")]
    BracketFailure(String),

    #[error("step size underflow at t = {t} (h = {h:e}), state = {state:?}")]
    StepUnderflow { t: f64, h: f64, state: Vec<f64> },

    #[error("non-finite right-hand side at t = {t}, state = {state:?}")]
    NonFinite { t: f64, state: Vec<f64> },

    #[error("singular cycle segment {segment} failed: {reason}")]
    Construction { segment: String, reason: String },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub fn construction(segment: &str, reason: impl Into<String>) -> Self {
        Error::Construction {
            segment: segment.to_string(),
            reason: reason.into(),
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) => 2,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
