use thiserror::Error;

use crate::mdp::ValidationReport;

#[derive(Debug, Error)]
pub enum CamoError {
    #[error("invalid MDP: {0}")]
    InvalidMdp(ValidationReport),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("distribution is not normalized (sum = {sum})")]
    NotNormalized { sum: f64 },

    #[error("invalid camouflage scheme: {0}")]
    InvalidScheme(String),

    #[error("appearance configuration out of domain: {0}")]
    OutOfDomain(String),

    #[error("empty perception domain")]
    EmptyDomain,

    #[error("invalid budget model: {0}")]
    InvalidBudget(String),

    #[error("{active} active attackers exceed the exact solver limit of {limit}; enable grid mode")]
    TooManyAttackers { active: usize, limit: usize },

    #[error("plan does not cover time {t}, joint state {state}")]
    PlanMismatch { t: usize, state: usize },

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("oracle budget exceeded: estimated {estimate} nodes > {limit}")]
    OracleBudget { estimate: f64, limit: f64 },

    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CamoError {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        CamoError::Config { field: field.into(), message: message.into() }
    }
}

pub type Result<T> = std::result::Result<T, CamoError>;
