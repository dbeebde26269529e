//! Sparse and dense linear algebra kernels.

mod dense;
mod direct;
mod mtx;
mod operator;
mod ortho;
mod smoothers;
mod sparse;

pub use dense::{cholesky, dense_generalized_eig, DenseEigen};
pub use direct::{solve_direct, DirectSolver, ShiftedSolver, SINGULAR_GROWTH};
pub use mtx::{read_matrix_market, write_matrix_market};
pub use operator::{RowOperator, ShiftedOperator};
pub use ortho::{
    b_orthonormalize, b_orthonormalize_tol, m_normalize, m_project_out, rayleigh_quotient,
    Orthonormalized, DROP_TOL,
};
pub use smoothers::{gauss_seidel, kaczmarz, kaczmarz_sweep};
pub use sparse::{axpy, dot, norm, SparseMatrix};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected:?}, got {got:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("entry ({row}, {col}) outside a {nrows}x{ncols} matrix")]
    IndexOutOfRange {
        row: usize,
        col: usize,
        nrows: usize,
        ncols: usize,
    },
    #[error("malformed CSR arrays")]
    InvalidCsr,
    #[error("matrix is {0}x{1}, expected square")]
    NotSquare(usize, usize),
    #[error("zero diagonal entry in row {0}")]
    ZeroDiagonal(usize),
    #[error("matrix is numerically singular")]
    Singular,
    #[error("matrix is not positive definite (pivot {0})")]
    NotPositiveDefinite(usize),
    #[error("non-finite matrix entries")]
    NonFinite,
    #[error("zero vector has no Rayleigh quotient")]
    ZeroVector,
    #[error("factorization failed: {0}")]
    Factorization(String),
    #[error("Matrix Market parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("I/O error: {0}")]
    Io(String),
}
