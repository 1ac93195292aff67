use thiserror::Error;

/// Errors raised by model construction, fitting and inference.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("mean is not positive at observation {index} (linear predictor {eta})")]
    NonPositiveMean { index: usize, eta: f64 },

    #[error("{count} nonpositive response value(s), first at index {first}")]
    NonPositiveResponse { count: usize, first: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("degenerate design: {0}")]
    DegenerateDesign(String),

    #[error("design matrix is rank deficient (rank {rank} < {cols} columns)")]
    RankDeficient { rank: usize, cols: usize },

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("fit did not converge after {iterations} iterations (|score|_inf = {grad_norm:e})")]
    NotConverged { iterations: usize, grad_norm: f64 },

    #[error("no feasible starting point: {0}")]
    Infeasible(String),

    #[error("{} nonpositive pixel(s) in the training region, first at {:?}", .0.len(), .0.first())]
    NonPositivePixels(Vec<(usize, usize)>),

    #[error("I/O error: {0}")]
    Io(String),

    #[error("parse error at line {line}, byte {byte}: {message}")]
    Parse { line: u64, byte: u64, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
