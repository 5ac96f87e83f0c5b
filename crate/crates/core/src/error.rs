use thiserror::Error;

use crate::matcore::Matrix;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("{context}: expected {expected:?}, got {got:?}")]
    DimensionMismatch {
        context: &'static str,
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("empty matrix ({rows}x{cols}); every dimension must be at least 1")]
    Empty { rows: usize, cols: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is singular to working precision (reciprocal condition {rcond:.3e})")]
    Singular { rcond: f64 },

    /// `lambda` is (numerically) an eigenvalue of the interior operator A0,
    /// so the Dirichlet problem at `lambda` is not uniquely solvable.
    #[error(
        "lambda = {lambda} is not in the resolvent set of A0 (reciprocal condition {rcond:.3e})"
    )]
    LambdaInSpectrum { lambda: f64, rcond: f64 },

    #[error("eigenvalue iteration did not converge")]
    EigenNonConvergence,

    #[error("could not separate invariant subspaces: {0}")]
    DefectiveBasis(String),

    #[error("quadrature did not converge after {doublings} panel doublings (last difference {est_error:.3e})")]
    QuadratureNonConvergence {
        best: Box<Matrix>,
        est_error: f64,
        doublings: usize,
    },

    #[error("unsupported case: {0}")]
    Unsupported(String),

    #[error("orbit has no limit: {0}")]
    NonConvergentOrbit(String),
}
