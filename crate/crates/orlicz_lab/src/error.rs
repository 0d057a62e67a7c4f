use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("argument {arg} outside representable range [{lo}, {hi}]")]
    Range { arg: f64, lo: f64, hi: f64 },
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("not regularizable: doubling constant {constant} exceeds cap {cap}")]
    NotRegularizable { constant: f64, cap: f64 },
    #[error("function is not in the space: {0}")]
    NotInSpace(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, LabError>;
