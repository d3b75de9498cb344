use thiserror::Error;

/// Errors raised by the laboratory.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum VwError {
    #[error("degree {0} is outside 0..=4")]
    InvalidDegree(usize),
    #[error("degree overflow: {0} + {1} exceeds 4")]
    DegreeOverflow(usize, usize),
    #[error("contraction needs positive degrees, got {0} and {1}")]
    ContractionDegree(usize, usize),
    #[error("expected degree {expected}, got {got}")]
    WrongDegree { expected: usize, got: usize },
    #[error("coefficient vector has length {got}, expected {expected}")]
    WrongLength { expected: usize, got: usize },
    #[error("form is not self-dual")]
    NotSelfDual,
    #[error("rank {0} is larger than 1")]
    RankTooLarge(usize),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("bad format: {0}")]
    Format(String),
    #[error("linear algebra failure: {0}")]
    LinAlg(String),
}

pub type Result<T> = std::result::Result<T, VwError>;

impl From<std::io::Error> for VwError {
    fn from(e: std::io::Error) -> Self {
        VwError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for VwError {
    fn from(e: serde_json::Error) -> Self {
        VwError::Format(e.to_string())
    }
}
