//! Finite element eigensolvers for the Laplace-Beltrami operator on closed
//! triangulated surfaces.
//!
//! The crate is organised bottom-up:
//!
//! - [`mesh`]: triangulations, uniform refinement with projection, OFF I/O.
//! - [`transfer`]: prolongation/restriction between nested levels.
//! - [`assembly`]: P1 stiffness and consistent mass matrices.
//! - [`linalg`]: CSR storage, smoothers, sparse direct and dense eigen solvers.
//! - [`eigensolver`]: two-grid, cascade and bootstrap multigrid drivers.
//! - [`estimator`]: residual a posteriori error estimator.
//! - [`validation`]: comparison with the exact sphere spectrum.

pub mod assembly;
pub mod eigensolver;
pub mod estimator;
pub mod linalg;
pub mod mesh;
pub mod transfer;
pub mod validation;
