use thiserror::Error;

/// Failures raised by parameter validation and vector-field evaluation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    #[error("expected {expected} tasks, got {got}")]
    TaskCount { expected: usize, got: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("state left the admissible region: {0}")]
    Inadmissible(String),

    #[error("negative task value v[{index}] = {value}")]
    NegativeValue { index: usize, value: f64 },

    #[error("distances phi1 = {phi1}, phi2 = {phi2} are infeasible for goal separation {c}")]
    Geometry { phi1: f64, phi2: f64, c: f64 },
}

impl ModelError {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        ModelError::InvalidParam {
            name,
            reason: reason.into(),
        }
    }
}
