use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh parameters: {0}")]
    MeshParams(String),
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("degenerate element {element} (volume {volume:e})")]
    DegenerateElement { element: usize, volume: f64 },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite value at vertex {0}")]
    NonFinite(usize),
    #[error("zero vector at vertex {0}")]
    ZeroVector(usize),
    #[error("coefficient condition violated: {0}")]
    CoefficientCondition(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("linear solver did not converge: relative residual {residual:e} after {iterations} iterations")]
    SolverNonConvergence { iterations: usize, residual: f64 },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
