use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("exponent argument {arg} exceeds cap {cap}")]
    Overflow { arg: f64, cap: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("point ({x}, {y}) lies outside the domain")]
    OutOfDomain { x: f64, y: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("energy is not finite at the initial iterate")]
    NonFiniteEnergy,

    #[error("line search failed at iteration {iteration} (energy {energy}, gradient norm {grad_norm})")]
    LineSearchFailure { iteration: usize, energy: f64, grad_norm: f64, iterate: Vec<f64> },

    #[error("stage k={k}, delta={delta}: {source}")]
    Stage {
        k: String,
        delta: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
