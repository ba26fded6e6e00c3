//! Sparse vectors/matrices, the matrix norm, diagonal-dominance tests, and
//! the approximate-solver contract with two interchangeable backends.

mod matrix_market;
mod solve;
mod sparse;

pub use matrix_market::{
    read_sparse_sym, read_two_nnz_factor, write_sparse_sym, write_two_nnz_factor,
};
pub use solve::{
    extreme_eigenvalue_bounds, solve_approx, solve_direct, Backend, LdltFactor, PreparedSolver,
    SolveConfig, Solver,
};
pub use sparse::{
    dominated_rows, gram, gram_masked, is_dd, m_norm, mat_vec, DiagMatrix, SparseMat, SparseSym,
    TwoNnzFactor,
};

use thiserror::Error;

/// Errors from the linear-algebra layer.
#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),
    #[error("quadratic form is negative beyond tolerance ({0:.3e}); input is not PSD")]
    NotPsd(f64),
    #[error("matrix is numerically singular (pivot {pivot:.3e} at step {step})")]
    Singular { step: usize, pivot: f64 },
    #[error(
        "iterative solver did not converge in {iterations} iterations \
         (relative residual {rel_residual:.3e})"
    )]
    ConvergenceFailure {
        iterations: usize,
        rel_residual: f64,
        /// Last iterate, so callers can triage or accept a degraded answer.
        last_iterate: Vec<f64>,
    },
    #[error("invalid solve configuration: {0}")]
    InvalidConfig(String),
    #[error("matrix market parse error at line {line}: {msg}")]
    MatrixMarket { line: usize, msg: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
