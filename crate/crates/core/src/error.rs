use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("divergent integral: {what} (exponent {exponent})")]
    DivergentIntegral { what: String, exponent: f64 },

    /// Raised when the Riesz potential of the input is infinite. This is the
    /// numerical counterpart of the integrability obstruction behind
    /// nonexistence.
    #[error("divergent Riesz potential: {violated} (tail exponent {tail_exponent}, alpha {alpha})")]
    DivergentRiesz {
        violated: String,
        tail_exponent: f64,
        alpha: f64,
    },

    #[error("power-law fit failed: {0}")]
    Fit(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("wrong region: expected {expected}, got {actual}")]
    Region { expected: String, actual: String },

    #[error("supersolution construction failed: {reason} (worst node r = {r}, violation {violation})")]
    Construction { reason: String, r: f64, violation: f64 },

    #[error("k = {k} too large for the supersolution (node r = {r}, relative violation {violation})")]
    KTooLarge { k: f64, r: f64, violation: f64 },

    #[error("internal consistency: {0}")]
    Consistency(String),

    #[error("analysis: {0}")]
    Analysis(String),

    #[error("solver configuration: {0}")]
    Configuration(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
