use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("vertex {vertex} out of range for n = {n}")]
    VertexOutOfRange { vertex: usize, n: usize },

    #[error("invalid hyperedge: {0}")]
    InvalidEdge(String),

    #[error("duplicate hyperedge id {0}")]
    DuplicateId(usize),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("infeasible parameters: {0}")]
    Infeasible(String),

    #[error("component of {size} vertices exceeds dense limit {limit}")]
    Capacity { size: usize, limit: usize },

    #[error("conjugate gradient did not converge in {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("unknown hyperedge id {0}")]
    UnknownEdge(usize),

    #[error("arity {arity} outside bucket [{lo}, {hi})")]
    ArityOutOfRange { arity: usize, lo: usize, hi: usize },

    #[error("insert exceeds configured capacity of {0} hyperedges")]
    CapacityExceeded(usize),

    #[error("label collision could not be resolved after {0} retries")]
    LabelCollision(usize),

    #[error("sketch mismatch: {0}")]
    SketchMismatch(String),

    #[error("malformed sketch data: {0}")]
    SketchFormat(String),

    #[error("delete operations are not allowed in online mode (op {0})")]
    DeleteInOnline(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
