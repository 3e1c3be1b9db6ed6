use thiserror::Error;

/// Errors raised by the optimisation library.
///
/// Domain errors concern a single evaluation (a point, a vector, a scalar
/// argument). Configuration errors concern the combination of objects a run
/// is assembled from and are raised before any iteration starts.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point {point:?} lies outside the evaluation domain (distance {distance:.3e} > margin {margin:.3e})")]
    OutsideDomain {
        point: Vec<f64>,
        distance: f64,
        margin: f64,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported combination: setup `{setup}` with feasible set `{set}`")]
    UnsupportedPair { setup: String, set: String },

    #[error("moment assumption violated: tail index {tail} must exceed 1 + kappa = {bound}")]
    MomentAssumption { tail: f64, bound: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("insufficient {what}: need at least {needed}, got {got}")]
    Insufficient {
        what: &'static str,
        needed: usize,
        got: usize,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    /// True for errors that describe an invalid setup rather than a failed
    /// evaluation.
    pub fn is_configuration(&self) -> bool {
        matches!(
            self,
            Error::UnsupportedPair { .. } | Error::MomentAssumption { .. } | Error::Config(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
