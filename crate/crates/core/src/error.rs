use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum So3Error {
    #[error("matrix is not skew-symmetric (‖S + Sᵀ‖ = {0:e})")]
    NonSkew(f64),
    #[error("matrix is not a rotation (‖RᵀR − I‖ = {orthogonality:e}, det = {det})")]
    NotARotation { orthogonality: f64, det: f64 },
    #[error("cannot project a matrix with det = {0:e} onto SO(3)")]
    Degenerate(f64),
}

/// A physical parameter failed validation. `field` names the offending
/// quantity.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{field}: {reason}")]
pub struct ParamError {
    pub field: String,
    pub reason: String,
}

impl ParamError {
    pub(crate) fn new(field: impl Into<String>, reason: impl Into<String>) -> Self {
        ParamError { field: field.into(), reason: reason.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("mass matrix is not positive definite")]
    SingularMass,
    #[error("rotation update left SO(3): {0}")]
    Rotation(#[from] So3Error),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("state left the finite range at step {step}")]
    NonFinite { step: usize },
    #[error("invalid simulation request: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("chart coordinate for {block} has norm {norm} ≥ π/2")]
    ChartOverflow { block: &'static str, norm: f64 },
    #[error("oracle mass matrix is not positive definite")]
    SingularMass,
}
