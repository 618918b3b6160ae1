use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the solver pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("extent {extent} is not an integer multiple of kappa {kappa}")]
    NonconformingKappa { extent: f64, kappa: f64 },

    #[error("kappa {kappa} must be smaller than delta/sqrt(2) = {limit}")]
    KappaTooLarge { kappa: f64, limit: f64 },

    #[error("kernel evaluated at zero bond length")]
    SingularEvaluation,

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("invalid region: {0}")]
    InvalidRegion(String),

    #[error("node {node} has non-positive weighted volume {m_num}")]
    DegenerateStencil { node: usize, m_num: f64 },

    #[error("dense assembly limited to {limit} cells, lattice has {cells}")]
    TooLargeForDense { cells: usize, limit: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("CG did not converge in {max_iter} iterations (relative residual {residual:e})")]
    NotConverged { max_iter: usize, residual: f64 },

    #[error("diagonal block of node {node} is not positive definite")]
    SingularBlock { node: usize },

    #[error("fields live on different domains")]
    DomainMismatch,

    #[error("unknown problem `{0}`")]
    UnknownProblem(String),

    #[error("cell pair ({i}, {j}) is not admissible for the quadrature oracle")]
    PairNotSmooth { i: usize, j: usize },

    #[error("cell triple ({i}, {j}, {m}) is not admissible for the quadrature oracle")]
    TripleNotSmooth { i: usize, j: usize, m: usize },

    #[error("weight table violates {count} consistency rule(s), first: {first}")]
    InvalidWeights { count: usize, first: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("malformed field dump: {0}")]
    FieldFormat(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
