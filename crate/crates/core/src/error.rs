use thiserror::Error;

use crate::hamiltonian::Trajectory;

pub type Result<T, E = NlsError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum NlsError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("shape mismatch: expected {expected} samples, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("trajectory needs at least {needed} states, got {got}")]
    TooFewStates { needed: usize, got: usize },

    #[error("perturbation must vanish at both endpoints of the time interval")]
    PerturbationNotPinned,

    #[error("SL(2,R) action hits its pole (a - c t = 0) at t = {t}")]
    Sl2Pole { t: f64 },

    #[error("parameter `{param}` = {value} lies outside the manifold domain ({reason})")]
    Domain {
        param: String,
        value: f64,
        reason: String,
    },

    #[error("restricted form is degenerate: condition number {condition:.3e}, kernel direction {kernel:?}")]
    Degenerate { condition: f64, kernel: Vec<f64> },

    #[error("blow-up detected; last valid time t = {t_last_valid}")]
    BlowUp {
        t_last_valid: f64,
        partial: Box<Trajectory>,
    },

    #[error("charge `{charge}` requires p = {required}, trajectory has p = {actual}")]
    IncompatibleCharge {
        charge: String,
        required: f64,
        actual: f64,
    },

    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl NlsError {
    pub(crate) fn param(name: &str, reason: impl Into<String>) -> Self {
        NlsError::InvalidParameter {
            name: name.to_string(),
            reason: reason.into(),
        }
    }
}
