use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid rational literal `{0}`")]
    ParseRational(String),
    #[error("invalid point literal `{0}`")]
    ParsePoint(String),
    #[error("coordinate out of range: {0}")]
    OutOfRange(String),
    #[error("negative radicand {0}")]
    NegativeRadicand(String),
    #[error("point {0} is not in the system")]
    UnknownPoint(String),
    #[error("invalid system presentation: {0}")]
    InvalidSystem(String),
    #[error("budget exhausted: {0}")]
    Budget(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("distance comparison undecided: {0}")]
    Undecided(String),
    #[error("ball around {0} is never visited")]
    Unvisited(String),
    #[error("{0}")]
    Construction(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
