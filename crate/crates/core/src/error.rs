use thiserror::Error;

/// Errors raised by the analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("enumeration limit exceeded: {what} = {count} exceeds the cap of {limit}")]
    ResourceLimit {
        what: String,
        count: u128,
        limit: u128,
    },

    #[error("infeasible: sigma = {sigma} is below the smallest attainable residual {sigma_star}")]
    Infeasible { sigma: f64, sigma_star: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("index {index} out of range (max {max})")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("outside domain: {0}")]
    Domain(String),
}

impl Error {
    /// True for errors caused by malformed or out-of-contract input, as opposed
    /// to a well-formed request whose analysis fails.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput(_) | Error::DimensionMismatch { .. } | Error::IndexOutOfRange { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
