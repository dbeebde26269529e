//! Sparse direct solves through an LU factorization with partial pivoting.

use super::{dot, norm, LinalgError, ShiftedOperator, SparseMatrix};
use faer::linalg::solvers::SolveCore;
use faer::sparse::{linalg::solvers::Lu, SparseColMat, Triplet};
use faer::{Conj, Mat, Par};
use std::sync::Once;

/// A solution is declared unreliable when `‖S‖_F ‖x‖ / ‖b‖` exceeds this.
/// Nonsingular shifted systems on the meshes in use stay below ~1e11 while
/// a shift equal to a discrete eigenvalue yields ~1e14 or more.
pub const SINGULAR_GROWTH: f64 = 1e13;

static SEQUENTIAL: Once = Once::new();

/// Keeps factorizations single-threaded so results do not depend on the
/// thread count.
fn force_sequential() {
    SEQUENTIAL.call_once(|| faer::set_global_parallelism(Par::Seq));
}

/// Reusable factorization of a square sparse matrix.
pub struct DirectSolver {
    lu: Lu<usize, f64>,
    matrix: SparseMatrix,
    norm_f: f64,
    kernel: Option<ConstantKernel>,
}

/// Data for solving a system whose kernel is the constant vector.
struct ConstantKernel {
    /// `M 1`
    m_one: Vec<f64>,
    /// `1ᵀ M 1`
    mass: f64,
}

impl std::fmt::Debug for DirectSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DirectSolver")
            .field("n", &self.matrix.nrows())
            .field("nnz", &self.matrix.nnz())
            .field("constant_kernel", &self.kernel.is_some())
            .finish()
    }
}

fn to_faer(a: &SparseMatrix) -> Result<SparseColMat<usize, f64>, LinalgError> {
    let mut triplets = Vec::with_capacity(a.nnz());
    for i in 0..a.nrows() {
        let (cols, vals) = a.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            triplets.push(Triplet::new(i, j, v));
        }
    }
    SparseColMat::try_new_from_triplets(a.nrows(), a.ncols(), &triplets)
        .map_err(|e| LinalgError::Factorization(format!("{e:?}")))
}

impl DirectSolver {
    pub fn factorize(a: &SparseMatrix) -> Result<Self, LinalgError> {
        force_sequential();
        if a.nrows() != a.ncols() {
            return Err(LinalgError::NotSquare(a.nrows(), a.ncols()));
        }
        if a.values().iter().any(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite);
        }
        let lu = to_faer(a)?.sp_lu().map_err(|_| LinalgError::Singular)?;
        Ok(DirectSolver {
            lu,
            matrix: a.clone(),
            norm_f: a.frobenius_norm(),
            kernel: None,
        })
    }

    /// Factorizes a symmetric positive semidefinite `a` whose kernel is
    /// spanned by the constant vector (the stiffness matrix of a closed
    /// surface). The first unknown is pinned to remove the kernel.
    pub fn factorize_constant_kernel(a: &SparseMatrix, m: &SparseMatrix) -> Result<Self, LinalgError> {
        let n = a.nrows();
        if n != a.ncols() || m.nrows() != n || m.ncols() != n {
            return Err(LinalgError::NotSquare(a.nrows(), a.ncols()));
        }
        let mut triplets = Vec::with_capacity(a.nnz());
        triplets.push((0, 0, 1.0));
        for i in 1..n {
            let (cols, vals) = a.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if j != 0 {
                    triplets.push((i, j, v));
                }
            }
        }
        let pinned = SparseMatrix::from_triplets(n, n, &triplets)?;
        let mut solver = Self::factorize(&pinned)?;
        let m_one = m.spmv(&vec![1.0; n])?;
        let mass = m_one.iter().sum();
        solver.kernel = Some(ConstantKernel { m_one, mass });
        Ok(solver)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn raw_solve(&self, b: &[f64]) -> Vec<f64> {
        let mut rhs = Mat::from_fn(b.len(), 1, |i, _| b[i]);
        self.lu.solve_in_place_with_conj(Conj::No, rhs.as_mut());
        (0..b.len()).map(|i| rhs[(i, 0)]).collect()
    }

    /// Solves `S x = b`. For a constant-kernel factorization `b` is first
    /// projected onto the range and the result is made `M`-orthogonal to
    /// constants.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let n = self.dim();
        if b.len() != n {
            return Err(LinalgError::DimensionMismatch {
                expected: (n, n),
                got: (b.len(), 1),
            });
        }
        let bn = norm(b);
        if bn == 0.0 {
            return Ok(vec![0.0; n]);
        }
        let mut rhs = b.to_vec();
        if self.kernel.is_some() {
            let mean = rhs.iter().sum::<f64>() / n as f64;
            rhs.iter_mut().for_each(|v| *v -= mean);
            rhs[0] = 0.0;
        }
        let mut x = self.raw_solve(&rhs);
        // one step of iterative refinement
        let ax = self.matrix.spmv(&x)?;
        let r: Vec<f64> = rhs.iter().zip(&ax).map(|(p, q)| p - q).collect();
        let dx = self.raw_solve(&r);
        x.iter_mut().zip(&dx).for_each(|(xi, di)| *xi += di);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(LinalgError::Singular);
        }
        if self.norm_f * norm(&x) / bn > SINGULAR_GROWTH {
            return Err(LinalgError::Singular);
        }
        if let Some(k) = &self.kernel {
            let c = dot(&k.m_one, &x) / k.mass;
            x.iter_mut().for_each(|v| *v -= c);
        }
        Ok(x)
    }
}

pub fn solve_direct(a: &SparseMatrix, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    DirectSolver::factorize(a)?.solve(b)
}

/// Factorization of `A - μM`. When the shift makes the system singular it
/// is moved once by `1e-8 (1 + |μ|)`.
#[derive(Debug)]
pub struct ShiftedSolver {
    pub solver: DirectSolver,
    /// Shift actually factorized.
    pub shift: f64,
    pub perturbed: bool,
}

impl ShiftedSolver {
    pub fn new(op: &ShiftedOperator<'_>) -> Result<Self, LinalgError> {
        match DirectSolver::factorize(&op.materialize()) {
            Ok(solver) => Ok(ShiftedSolver { solver, shift: op.shift, perturbed: false }),
            Err(LinalgError::Singular) => Self::perturbed(op),
            Err(e) => Err(e),
        }
    }

    fn perturbed(op: &ShiftedOperator<'_>) -> Result<Self, LinalgError> {
        let shift = op.shift + 1e-8 * (1.0 + op.shift.abs());
        let moved = ShiftedOperator { shift, ..*op };
        let solver = DirectSolver::factorize(&moved.materialize())?;
        Ok(ShiftedSolver { solver, shift, perturbed: true })
    }

    /// Solves, re-factorizing at the perturbed shift if the first solve is
    /// flagged singular.
    pub fn solve(&mut self, op: &ShiftedOperator<'_>, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        match self.solver.solve(b) {
            Err(LinalgError::Singular) if !self.perturbed => {
                *self = Self::perturbed(op)?;
                self.solver.solve(b)
            }
            other => other,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};

    fn laplacian_1d_periodic(n: usize) -> SparseMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            t.push((i, (i + 1) % n, -1.0));
            t.push(((i + 1) % n, i, -1.0));
        }
        SparseMatrix::from_triplets(n, n, &t).unwrap()
    }

    #[test]
    fn matches_dense_lu() {
        let d = DMatrix::from_row_slice(3, 3, &[4.0, -1.0, 0.5, -1.0, 3.0, 0.0, 0.5, 0.0, -2.0]);
        let b = [1.0, 2.0, 3.0];
        let x = solve_direct(&SparseMatrix::from_dense(&d), &b).unwrap();
        let xd = d.lu().solve(&DVector::from_row_slice(&b)).unwrap();
        for k in 0..3 {
            assert!((x[k] - xd[k]).abs() < 1e-14);
        }
    }

    #[test]
    fn identity_and_zero_rhs() {
        let i = SparseMatrix::identity(4);
        assert_eq!(solve_direct(&i, &[1.0, 2.0, 3.0, 4.0]).unwrap(), vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(solve_direct(&i, &[0.0; 4]).unwrap(), vec![0.0; 4]);
    }

    #[test]
    fn detects_singular_matrix() {
        let a = laplacian_1d_periodic(8);
        let b: Vec<f64> = (0..8).map(|k| k as f64).collect();
        assert!(matches!(solve_direct(&a, &b), Err(LinalgError::Singular)));
        let zero_row = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 1.0)]).unwrap();
        assert!(solve_direct(&zero_row, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn constant_kernel_solve() {
        let n = 10;
        let a = laplacian_1d_periodic(n);
        let m = SparseMatrix::identity(n);
        let s = DirectSolver::factorize_constant_kernel(&a, &m).unwrap();
        let b: Vec<f64> = (0..n).map(|k| (k as f64 * 0.7).sin()).collect();
        let x = s.solve(&b).unwrap();
        assert!(x.iter().sum::<f64>().abs() < 1e-12);
        // A x equals the range projection of b
        let mean = b.iter().sum::<f64>() / n as f64;
        let ax = a.spmv(&x).unwrap();
        for k in 0..n {
            assert!((ax[k] - (b[k] - mean)).abs() < 1e-12);
        }
    }

    #[test]
    fn shifted_solver_perturbs_exact_eigenvalue() {
        // eigenvalues of the periodic 1D Laplacian with n = 8 are 2 - 2cos(2πk/8)
        let a = laplacian_1d_periodic(8);
        let m = SparseMatrix::identity(8);
        let op = ShiftedOperator::new(&a, &m, 2.0).unwrap();
        let mut s = ShiftedSolver::new(&op).unwrap();
        let b = vec![1.0; 8];
        let x = s.solve(&op, &b).unwrap();
        assert!(s.perturbed);
        assert!(x.iter().all(|v| v.is_finite()));
        let op = ShiftedOperator::new(&a, &m, 0.3).unwrap();
        let mut s = ShiftedSolver::new(&op).unwrap();
        s.solve(&op, &b).unwrap();
        assert!(!s.perturbed);
    }
}
