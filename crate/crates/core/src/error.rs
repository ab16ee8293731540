use thiserror::Error;

/// Errors raised by the solver, the model validators and the checks.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum OclError {
    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate datum: {0}")]
    DegenerateDatum(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    /// The multiplier made the reaction stage ill-posed (`dt * lambda >= 1`).
    #[error("stiff reaction at t = {t}: dt * lambda = {product} (dt = {dt})")]
    Stiffness { t: f64, dt: f64, product: f64 },

    #[error("internal invariant violated: {0}")]
    InternalInvariant(String),

    #[error("boundary leak {leaked:.3e} exceeds tolerance {tolerance:.3e} at t = {t}")]
    BoundaryLeak { t: f64, leaked: f64, tolerance: f64 },

    #[error("sampling error: {0}")]
    Sampling(String),

    #[error("degenerate Picard seeds: {0}")]
    DegenerateSeed(String),

    #[error("invalid test function: {0}")]
    InvalidTestFunction(String),

    #[error("validation failed ({invariant}): {detail}")]
    Validation { invariant: String, detail: String },
}

pub type Result<T> = std::result::Result<T, OclError>;

pub(crate) fn validation(invariant: &str, detail: impl Into<String>) -> OclError {
    OclError::Validation {
        invariant: invariant.to_string(),
        detail: detail.into(),
    }
}
