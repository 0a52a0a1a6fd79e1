use thiserror::Error;

/// Errors produced by the model, dynamics and checker routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point is not in the probability simplex: {reason}")]
    NotInSimplex { reason: String },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("relative entropy undefined: reference has zero mass at coordinate {coordinate} where the measure is positive")]
    RelativeEntropyUndefined { coordinate: usize },

    #[error("lattice state space has {states} states, above the limit of {limit}")]
    StateSpaceTooLarge { states: u128, limit: u128 },

    #[error("conjugate maximization failed to bracket at slope {slope} (interaction not coercive)")]
    NonCoercive { slope: f64 },

    #[error("operation requires the power (generalized Curie-Weiss-Potts) interaction")]
    RequiresPowerInteraction,

    #[error("grid search over the simplex is disabled for q = {q} > 4")]
    GridSearchTooLarge { q: usize },

    #[error("equilibrium is not unique at beta = {beta}")]
    NonUniqueEquilibrium { beta: f64 },

    #[error("grid search found value {grid_value} below the analytic candidate {candidate_value}")]
    CrossValidation {
        candidate_value: f64,
        grid_value: f64,
    },

    #[error("adaptive quadrature did not converge on [{a}, {b}] (estimated error {error_estimate})")]
    Quadrature {
        a: f64,
        b: f64,
        error_estimate: f64,
    },

    #[error("distance to stationarity did not reach {epsilon} within {max_steps} steps (last d(t) = {last})")]
    NotMixed {
        epsilon: f64,
        max_steps: usize,
        last: f64,
    },

    #[error("path endpoints coincide")]
    DegeneratePath,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
