use thiserror::Error;

/// Errors raised by validation and by operations whose preconditions fail.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite entry at index {0}")]
    NonFinite(usize),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("dimension must be positive")]
    ZeroDimension,
    #[error("vector is not normalized: squared norm {norm_sq}")]
    NotNormalized { norm_sq: f64 },
    #[error("operator is not self-adjoint: ||A - A*|| = {defect:e}")]
    NotSelfAdjoint { defect: f64 },
    #[error("operator is not positive: smallest eigenvalue {min_eigenvalue:e}")]
    NotPositive { min_eigenvalue: f64 },
    #[error("operator does not have unit trace: trace {trace}")]
    NotUnitTrace { trace: f64 },
    #[error("operator {index} is not a projector (defect {defect:e})")]
    NotProjector { index: usize, defect: f64 },
    #[error("projectors {first} and {second} are not orthogonal (||B_j B_k|| = {overlap:e})")]
    NotOrthogonal {
        first: usize,
        second: usize,
        overlap: f64,
    },
    #[error("projector family is empty")]
    EmptyFamily,
    #[error("projector family is incomplete: ||I - sum B_j|| = {defect:e}")]
    IncompleteFamily { defect: f64 },
    #[error("operator is not in the measurement algebra (residual {residual:e})")]
    NotInAlgebra { residual: f64 },
    #[error("every branch of the projector family has zero weight")]
    AllWeightsZero,
    #[error("branch {index} has zero probability (weight {weight:e})")]
    ZeroProbabilityBranch { index: usize, weight: f64 },
    #[error("conditioning event has zero probability")]
    ZeroProbabilityEvent,
    #[error("weights are invalid: {0}")]
    InvalidWeights(String),
    #[error("predictor has no value for level {0}")]
    MissingLevel(f64),
    #[error("time must be positive, got {0}")]
    NonPositiveTime(f64),
    #[error("energy must be positive, got {0}")]
    NonPositiveEnergy(f64),
    #[error("source and detector points coincide")]
    CoincidentPoints,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
