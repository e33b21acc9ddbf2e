use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An input lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("range error: {0}")]
    Range(String),

    /// A requested computation does not fit the supported size bounds.
    #[error("capacity exceeded: {what} requires {requested}, limit is {limit}")]
    Capacity {
        what: &'static str,
        requested: u128,
        limit: u128,
    },

    #[error("basis is not orthonormal: worst pair ({i}, {j}) has residual {residual:.3e}")]
    BasisValidation { i: usize, j: usize, residual: f64 },

    #[error("{p} is not dyadic at denominator 2^{log2_denominator} (residual {residual:.3e})")]
    NonDyadic {
        p: f64,
        log2_denominator: u32,
        residual: f64,
    },

    #[error("unknown event: {0}")]
    UnknownEvent(String),

    #[error("negative probability {0:.3e} produced by contraction")]
    NegativeProbability(f64),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid target: {0}")]
    InvalidTarget(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn capacity(what: &'static str, requested: u128, limit: u128) -> Self {
        Error::Capacity {
            what,
            requested,
            limit,
        }
    }

    pub fn is_capacity(&self) -> bool {
        matches!(self, Error::Capacity { .. })
    }
}
