use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// Singular values too close to each other (`upper = Some(j+1)`) or the
    /// smallest one too close to zero (`upper = None`).
    #[error("near-degenerate singular values at index {lower} (pair {lower}/{upper:?}): value {value:e} below threshold {threshold:e}")]
    NearDegenerate {
        lower: usize,
        upper: Option<usize>,
        value: f64,
        threshold: f64,
    },

    #[error("step too large: column {column} overlap {overlap:.6} below {corr_min}")]
    StepTooLarge {
        column: usize,
        overlap: f64,
        corr_min: f64,
    },

    #[error("continuation failed after t = {last_t}: {reason}")]
    ContinuationFailed { last_t: f64, reason: String },

    #[error("refinement needed: phase increment {increment:.4} at step {step} of column {column}")]
    RefinementNeeded {
        column: usize,
        step: usize,
        increment: f64,
    },

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("contract violation: {0}")]
    Contract(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }
}
