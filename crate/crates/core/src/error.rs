use thiserror::Error;

use crate::shooting::SolveResult;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not skew-symmetric (asymmetry {0:e})")]
    NonSkewInput(f64),

    #[error("rotation is at gimbal lock (|cos pitch| = {0:e})")]
    GimbalLock(f64),

    #[error("rotation matrix is not orthonormal (deviation {0:e})")]
    NotARotation(f64),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("rod integration failed at s = {s}: {reason}")]
    IntegrationFailure { s: f64, reason: String },

    #[error("integration of leg {leg} failed: {source}")]
    LegIntegration {
        leg: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("vector layout mismatch: expected {expected}, got {got}")]
    LayoutMismatch { expected: String, got: String },

    #[error("residual evaluation failed for Jacobian column {column}: {source}")]
    JacobianColumn {
        column: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("normal equations are singular")]
    SingularNormalEquations,

    #[error("solver did not converge (max residual {:e} after {} iterations)", .0.residual_norm, .0.iterations)]
    NoConvergence(Box<SolveResult>),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
