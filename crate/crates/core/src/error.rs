use thiserror::Error;

/// Errors surfaced by the reliability kernels.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian within {tol:e} (deviation {dev:e})")]
    NotHermitian { dev: f64, tol: f64 },
    #[error("matrix is not a projector within {tol:e} (idempotency deviation {dev:e})")]
    NotIdempotent { dev: f64, tol: f64 },
    #[error("operator is not unitary within {tol:e} (deviation {dev:e})")]
    NotUnitary { dev: f64, tol: f64 },
    #[error("projectors do not commute (‖[A,B]‖ = {dev:e} > {tol:e})")]
    NonCommuting { dev: f64, tol: f64 },
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error("unknown component `{0}`")]
    UnknownComponent(String),
    #[error("unbound component `{0}`")]
    UnboundComponent(String),
    #[error("syntax error at line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("non-finite value encountered in {0}")]
    NonFinite(String),
    #[error("zero-trace matrix: {0}")]
    ZeroTrace(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed matrix file: {0}")]
    MatrixFormat(String),
}

pub type Result<T> = std::result::Result<T, Error>;
