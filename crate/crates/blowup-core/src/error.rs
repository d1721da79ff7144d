use thiserror::Error;

/// Errors surfaced by the library. Numerical outcomes that are merely
/// undecided (orbit fates, profile fates) are values, not errors, unless an
/// operation cannot produce its result without a decision.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{0}")]
    Constraint(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid integration controls: {0}")]
    Controls(String),
    #[error("bracket error: {0}")]
    Bracket(String),
    #[error("inconclusive: {0}")]
    Inconclusive(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
