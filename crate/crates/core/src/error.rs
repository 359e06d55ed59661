use thiserror::Error;

/// Errors produced by the estimation pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("treatment level {0} is never observed")]
    UnobservedLevel(usize),

    #[error("value estimate undefined: the rule agrees with no duplicated observation")]
    UndefinedValue,

    #[error("unknown scenario `{0}` (valid: L2, L3, L5, L7, N2, N3, N5, N7, NP3)")]
    UnknownScenario(String),

    #[error("every tuning cell failed: {}", .0.join("; "))]
    AllCellsFailed(Vec<String>),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
