use thiserror::Error;

/// Errors raised by the simulation and verification layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A point or argument lies outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// The model does not satisfy a hypothesis the operation needs.
    #[error("model error: {0}")]
    Model(String),
    /// A caller-supplied parameter is invalid.
    #[error("parameter error: {0}")]
    Parameter(String),
    /// A quadrature could not reach the requested tolerance.
    #[error("accuracy error: error estimate {estimate:e} exceeds tolerance {tolerance:e}")]
    Accuracy { estimate: f64, tolerance: f64 },
    /// The discrete oracle state space is too large for a dense solve.
    #[error("capacity error: {states} states exceed the limit of {limit}")]
    Capacity { states: u128, limit: usize },
    #[error("numerical error: {0}")]
    Numerical(String),
    /// A statistical estimator hit a degenerate input.
    #[error("estimation error: {0}")]
    Estimation(String),
    /// Coupling from the past did not coalesce inside the allowed window.
    #[error("no coalescence within a backward window of {window} time units")]
    NoCoalescence { window: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
