//! Error type shared by every module of the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, ArenaError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ArenaError {
    #[error("design budget must be at least 1")]
    InvalidBudget,
    #[error("category-structure type {0} is outside 1..=6")]
    InvalidType(u8),
    #[error("invalid stimulus space: {0}")]
    InvalidSpace(String),
    #[error("parameters are for {found}, expected {expected}")]
    TheoryMismatch { expected: String, found: String },
    #[error("parameter {name} = {value} is outside its bounds")]
    ParameterOutOfBounds { name: &'static str, value: f64 },
    #[error("lapse rate {0} is outside [0, 1]")]
    InvalidLapse(f64),
    #[error("theory {0} has no particle with positive weight")]
    DegenerateParticles(String),
    #[error("profile/data refer to design {found}, expected {expected}")]
    DesignMismatch { expected: String, found: String },
    #[error("unknown theory {0}")]
    UnknownTheory(String),
    #[error("the candidate design pool is empty")]
    EmptyPool,
    #[error("design {id} failed validation: {violations}")]
    InvalidDesign { id: String, violations: String },
    #[error("agent {agent} unavailable: {reason}")]
    AgentUnavailable { agent: String, reason: String },
    #[error("config error in {path}: field `{field}`: {reason}")]
    Config {
        path: String,
        field: String,
        reason: String,
    },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("io error: {0}")]
    Io(String),
}

impl ArenaError {
    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        ArenaError::Config {
            path: "<config>".into(),
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Attaches a file path to a config error; other variants pass through.
    pub fn at_path(self, p: &str) -> Self {
        match self {
            ArenaError::Config { field, reason, .. } => ArenaError::Config {
                path: p.to_string(),
                field,
                reason,
            },
            other => other,
        }
    }

    /// Stable upper-snake code, used in traces, CSV error columns and the C ABI.
    pub fn code(&self) -> &'static str {
        match self {
            ArenaError::InvalidBudget => "INVALID_BUDGET",
            ArenaError::InvalidType(_) => "INVALID_TYPE",
            ArenaError::InvalidSpace(_) => "INVALID_SPACE",
            ArenaError::TheoryMismatch { .. } => "THEORY_MISMATCH",
            ArenaError::ParameterOutOfBounds { .. } => "PARAMETER_OUT_OF_BOUNDS",
            ArenaError::InvalidLapse(_) => "INVALID_LAPSE",
            ArenaError::DegenerateParticles(_) => "DEGENERATE_PARTICLES",
            ArenaError::DesignMismatch { .. } => "DESIGN_MISMATCH",
            ArenaError::UnknownTheory(_) => "UNKNOWN_THEORY",
            ArenaError::EmptyPool => "EMPTY_POOL",
            ArenaError::InvalidDesign { .. } => "INVALID_DESIGN",
            ArenaError::AgentUnavailable { .. } => "AGENT_UNAVAILABLE",
            ArenaError::Config { .. } => "CONFIG",
            ArenaError::Schema(_) => "SCHEMA",
            ArenaError::Io(_) => "IO",
        }
    }
}

impl From<std::io::Error> for ArenaError {
    fn from(e: std::io::Error) -> Self {
        ArenaError::Io(e.to_string())
    }
}
