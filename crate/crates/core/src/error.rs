use thiserror::Error;

/// Errors raised by the filtering library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parameter `{0}` must be positive and finite")]
    NonPositiveParameter(&'static str),
    #[error("parameter `{0}` must be finite")]
    NonFiniteParameter(&'static str),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("time regression: requested t = {requested} but state is at t = {current}")]
    TimeRegression { current: f64, requested: f64 },
    #[error("argument s = {s} outside the domain s < {bound}")]
    OutOfDomain { s: f64, bound: f64 },
    #[error("jump times must be strictly increasing and positive (offending value {0})")]
    NonMonotoneJumps(f64),
    #[error("degenerate filter state: {0}")]
    DegenerateState(String),
    #[error("particle weights degenerated at t = {0}")]
    Degeneracy(f64),
    #[error("adaptive step failure at t = {t}: step size {h} below minimum")]
    StepFailure { t: f64, h: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
