use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("integration failed at step {step} (t = {time}): norm correction {correction:e} exceeds {limit:e}")]
    Integration {
        step: usize,
        time: f64,
        correction: f64,
        limit: f64,
    },

    #[error("trajectory {index} (seed {seed}) failed: {source}")]
    Trajectory {
        index: usize,
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("time {0} is not on the recorded grid")]
    OffGrid(f64),

    #[error("at record {index}: {source}")]
    AtRecord {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn param(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }
}
