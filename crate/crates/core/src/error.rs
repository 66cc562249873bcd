use thiserror::Error;

/// Errors raised by region computation, search and simulation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("unknown axis `{0}`")]
    UnknownAxis(String),

    #[error("axis `{0}` appears in more than one argument set")]
    OverlappingAxes(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(
        "model is not degraded: worst decoder power gain {worst_decoder} < best eavesdropper power gain {best_eve}; only R_S = 0 is achievable"
    )]
    NotDegraded { worst_decoder: f64, best_eve: f64 },

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("{what}: requires {required} cells but the cap is {allowed}; raise the cap or shrink the instance")]
    CapExceeded {
        what: &'static str,
        required: u128,
        allowed: u128,
    },

    #[error("sequence length {got} does not match block length {expected}")]
    LengthMismatch { expected: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
