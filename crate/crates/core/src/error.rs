use thiserror::Error;

/// Errors raised by chart evaluation, dynamics and the model loaders.
#[derive(Debug, Error)]
pub enum Error {
    #[error("coordinate {axis} = {value} lies outside the chart domain ({lower}, {upper})")]
    OutOfChart {
        axis: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },
    #[error("non-finite value encountered in {0}")]
    NonFinite(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("derivative unavailable: {0}")]
    Capability(String),
    #[error("invalid model: {0}")]
    Model(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("trajectory left the chart domain at t = {time}")]
    Escape { time: f64 },
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("step size underflow at t = {time} (dt = {dt:e})")]
    Stiff { time: f64, dt: f64 },
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Parse-type errors, i.e. problems with user input rather than with the numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Parse(_) | Error::Json(_) | Error::Io(_) | Error::Model(_) | Error::Dimension(_)
        )
    }
}

pub(crate) fn ensure_finite(values: &[f64], what: &str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}
