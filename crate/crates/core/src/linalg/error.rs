use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("dimension mismatch in {op}: left is {left:?}, right is {right:?}")]
    DimensionMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("buffer of length {len} cannot hold a {rows}x{cols} matrix")]
    BadBuffer { rows: usize, cols: usize, len: usize },
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric: max |m_ij - m_ji| = {asymmetry:e} exceeds {tolerance:e}")]
    NotSymmetric { asymmetry: f64, tolerance: f64 },
    #[error("eigensolver did not converge after {iterations} iterations (off-diagonal residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("threshold must be finite and non-negative, got {0}")]
    InvalidThreshold(f64),
    #[error("invalid CSR structure: {0}")]
    InvalidCsr(String),
}
