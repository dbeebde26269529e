//! Two-grid, cascade and bootstrap multigrid eigensolvers.
//!
//! Eigenvalues of a shifted pencil `(A - μM, M)` are stored as computed, so
//! an [`EigenSet`] holds `λ - μ` together with `μ`. Rayleigh quotients of
//! fine iterates are reported as `RQ(A - μM) + μ`, the Rayleigh quotient of
//! `A` itself.

mod bmg;
mod enriched;
mod enrichment;
mod hierarchy;
mod subspace;
mod two_grid;

pub use bmg::{bfmg, bmg, two_grid_bmg, update_shift, BmgConfig, BmgResult, BmgState, CycleRecord, ShiftPolicy};
pub use enriched::{build_enriched_system, enriched_eigensolve, CoarseBlock, EnrichedSystem};
pub use enrichment::{cluster_tolerance, clusters, select_enrichment, EnrichmentPolicy, CLUSTER_REL_GAP};
pub use hierarchy::Hierarchy;
pub use subspace::{level_eigensolve, reference_eigensolve, subspace_eigensolve, DENSE_LIMIT};
pub use two_grid::{cascade_two_grid, two_grid, CascadeResult, LevelValues, TwoGridPair};

use crate::assembly::{AssemblyError, FemForms};
use crate::linalg::{
    dense_generalized_eig, dot, gauss_seidel, kaczmarz_sweep, DirectSolver, LinalgError, RowOperator,
    ShiftedOperator, SparseMatrix,
};
use crate::mesh::MeshError;
use crate::transfer::TransferError;
use nalgebra::DMatrix;
use thiserror::Error;

/// Shifts and eigenvalues with magnitude at or below this are treated as
/// zero, i.e. as the constant kernel of the closed-surface Laplacian.
pub const KERNEL_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid input: {0}")]
    Config(String),
    #[error("enrichment set is empty; widen the tolerance or the window")]
    EmptyEnrichment,
    #[error("enriched mass matrix is not positive definite; near-dependent enrichment vectors: {near_dependent:?}")]
    IndefiniteEnrichedMass { near_dependent: Vec<usize> },
    #[error("iterate vanished after deflation ({0})")]
    Breakdown(String),
    #[error("{0}")]
    Linalg(#[from] LinalgError),
    #[error("{0}")]
    Transfer(#[from] TransferError),
    #[error("{0}")]
    Assembly(#[from] AssemblyError),
    #[error("{0}")]
    Mesh(#[from] MeshError),
}

/// Coordinates in which [`EigenSet::vectors`] are expressed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    /// Nodal values on a hierarchy level.
    Nodal { level: usize },
    /// Coefficients over `[P | U]` of an enriched system on `level`.
    Enriched { level: usize, coarse_dim: usize, enrich_dim: usize },
}

#[derive(Debug, Clone)]
pub struct EigenSet {
    /// Pencil eigenvalues `λ - μ`, ascending.
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub basis: Basis,
    pub shift: f64,
}

impl EigenSet {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Eigenvalues of the unshifted problem.
    pub fn unshifted(&self) -> Vec<f64> {
        self.values.iter().map(|v| v + self.shift).collect()
    }
}

pub(crate) fn dense_of(a: &SparseMatrix) -> DMatrix<f64> {
    a.to_dense()
}

/// Lowest `count` eigenpairs of `(A - μM) x = λ M x` on one level by a
/// dense solve.
pub fn coarse_eigensolve(forms: &FemForms, shift: f64, count: usize) -> Result<EigenSet, SolverError> {
    let n = forms.dim();
    if n > 4000 {
        return Err(SolverError::Config(format!("{n} unknowns is too many for a dense eigensolve")));
    }
    let a = dense_of(&forms.stiffness);
    let m = dense_of(&forms.mass);
    let eig = dense_generalized_eig(&(&a - shift * &m), &m)?;
    let count = count.min(n);
    Ok(EigenSet {
        values: eig.values[..count].to_vec(),
        vectors: (0..count).map(|k| eig.vectors.column(k).iter().copied().collect()).collect(),
        basis: Basis::Nodal { level: 0 },
        shift,
    })
}

/// How the fine source problems are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceSolver {
    Direct,
    /// Symmetric Gauss-Seidel sweeps.
    GaussSeidel { sweeps: usize },
    /// Cyclic Kaczmarz sweeps.
    Kaczmarz { sweeps: usize },
}

impl std::fmt::Display for SourceSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SourceSolver::Direct => write!(f, "direct"),
            SourceSolver::GaussSeidel { sweeps } => write!(f, "gauss_seidel({sweeps})"),
            SourceSolver::Kaczmarz { sweeps } => write!(f, "kaczmarz({sweeps})"),
        }
    }
}

/// Vectors kept `M`-orthogonal to later iterates, with their `M`-images.
#[derive(Debug, Clone, Default)]
pub struct Deflation {
    vectors: Vec<Vec<f64>>,
    m_images: Vec<Vec<f64>>,
}

impl Deflation {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds an `M`-normalized vector.
    pub fn push(&mut self, v: Vec<f64>, m: &SparseMatrix) -> Result<(), SolverError> {
        self.m_images.push(m.spmv(&v)?);
        self.vectors.push(v);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn into_vectors(self) -> Vec<Vec<f64>> {
        self.vectors
    }

    pub fn apply(&self, v: &mut [f64]) {
        for (q, mq) in self.vectors.iter().zip(&self.m_images) {
            let c = dot(mq, v);
            v.iter_mut().zip(q).for_each(|(vi, qi)| *vi -= c * qi);
        }
    }
}

enum Backend {
    Direct(DirectSolver),
    GaussSeidel(usize),
    Kaczmarz { sweeps: usize, row_norms_sq: Vec<f64> },
}

/// The system `(A - σM) u = b` on one level, prepared for repeated solves.
pub struct ShiftedSystem<'a> {
    op: ShiftedOperator<'a>,
    backend: Backend,
    /// Shift after a possible singularity perturbation.
    pub shift: f64,
}

impl<'a> ShiftedSystem<'a> {
    pub fn new(forms: &'a FemForms, shift: f64, method: SourceSolver) -> Result<Self, SolverError> {
        let op = ShiftedOperator::new(&forms.stiffness, &forms.mass, shift)?;
        let (backend, shift) = match method {
            SourceSolver::Direct if shift.abs() <= KERNEL_TOL => (
                Backend::Direct(DirectSolver::factorize_constant_kernel(&forms.stiffness, &forms.mass)?),
                shift,
            ),
            SourceSolver::Direct => {
                let (solver, shift) = factorize_nonsingular(forms, shift)?;
                (Backend::Direct(solver), shift)
            }
            SourceSolver::GaussSeidel { sweeps } => (Backend::GaussSeidel(sweeps), shift),
            SourceSolver::Kaczmarz { sweeps } => (
                Backend::Kaczmarz { sweeps, row_norms_sq: op.row_norms_sq() },
                shift,
            ),
        };
        let op = ShiftedOperator { shift, ..op };
        Ok(ShiftedSystem { op, backend, shift })
    }

    pub fn operator(&self) -> &ShiftedOperator<'a> {
        &self.op
    }

    /// Solves or relaxes from `x0`, projecting out `deflation` after the
    /// solve or after every sweep.
    pub fn solve(&self, rhs: &[f64], x0: &[f64], deflation: &Deflation) -> Result<Vec<f64>, SolverError> {
        let x = match &self.backend {
            Backend::Direct(s) => {
                let mut x = s.solve(rhs)?;
                deflation.apply(&mut x);
                x
            }
            Backend::GaussSeidel(sweeps) => {
                let mut x = x0.to_vec();
                for _ in 0..*sweeps {
                    x = gauss_seidel(&self.op, rhs, &x, 1)?;
                    deflation.apply(&mut x);
                }
                x
            }
            Backend::Kaczmarz { sweeps, row_norms_sq } => {
                let mut x = x0.to_vec();
                for _ in 0..*sweeps {
                    kaczmarz_sweep(&self.op, rhs, row_norms_sq, &mut x);
                    deflation.apply(&mut x);
                }
                x
            }
        };
        if x.iter().any(|v| !v.is_finite()) {
            return Err(SolverError::Linalg(LinalgError::NonFinite));
        }
        Ok(x)
    }
}

/// Factorizes `A - σM`, moving σ once by `1e-8 (1 + |σ|)` if a probe solve
/// reveals a singular system.
fn factorize_nonsingular(forms: &FemForms, shift: f64) -> Result<(DirectSolver, f64), SolverError> {
    let n = forms.dim();
    let probe: Vec<f64> = (0..n).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
    let attempt = |s: f64| -> Result<DirectSolver, LinalgError> {
        let op = ShiftedOperator::new(&forms.stiffness, &forms.mass, s)?;
        let solver = DirectSolver::factorize(&op.materialize())?;
        solver.solve(&probe)?;
        Ok(solver)
    };
    match attempt(shift) {
        Ok(s) => Ok((s, shift)),
        Err(LinalgError::Singular) => {
            let moved = shift + 1e-8 * (1.0 + shift.abs());
            Ok((attempt(moved)?, moved))
        }
        Err(e) => Err(e.into()),
    }
}

/// `vᵀ(A - μM)v / vᵀMv`.
pub(crate) fn pencil_quotient(forms: &FemForms, v: &[f64], shift: f64) -> Result<f64, SolverError> {
    let op = ShiftedOperator::new(&forms.stiffness, &forms.mass, shift)?;
    let den = forms.mass.bilinear(v, v);
    if !(den > 0.0) {
        return Err(SolverError::Breakdown("zero vector in Rayleigh quotient".into()));
    }
    Ok(dot(v, &op.apply(v)) / den)
}

pub(crate) fn m_normalized(mut v: Vec<f64>, m: &SparseMatrix, what: &str) -> Result<Vec<f64>, SolverError> {
    let n2 = m.bilinear(&v, &v);
    if !(n2 > 0.0) || !n2.is_finite() {
        return Err(SolverError::Breakdown(what.to_string()));
    }
    let s = n2.sqrt();
    v.iter_mut().for_each(|x| *x /= s);
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::assemble;
    use crate::mesh::{make_octahedron, refine_hierarchy, UnitSphere};

    fn forms(level: usize) -> FemForms {
        assemble(&refine_hierarchy(make_octahedron(), level, &UnitSphere).unwrap()[level]).unwrap()
    }

    #[test]
    fn coarse_kernel_is_constant() {
        let f = forms(0);
        let e = coarse_eigensolve(&f, 0.0, 1).unwrap();
        assert!(e.values[0].abs() < 1e-12);
        let v = &e.vectors[0];
        assert!(v.iter().all(|x| (x - v[0]).abs() < 1e-12));
    }

    #[test]
    fn coarse_l1_cluster_has_three_members() {
        let e = coarse_eigensolve(&forms(2), 0.0, 10).unwrap();
        let l1: Vec<f64> = e.values[1..4].to_vec();
        assert!(l1.iter().all(|v| (v - 2.0).abs() < 0.2), "{l1:?}");
        assert!(e.values[4] > 4.0);
    }

    #[test]
    fn shifted_pencil_shifts_values() {
        let f = forms(2);
        let e0 = coarse_eigensolve(&f, 0.0, 66).unwrap();
        let e32 = coarse_eigensolve(&f, 32.0, 66).unwrap();
        for (a, b) in e0.values.iter().zip(&e32.values) {
            assert!((a - 32.0 - b).abs() < 1e-10);
        }
        for (a, b) in e0.unshifted().iter().zip(e32.unshifted()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn direct_source_residual() {
        let f = forms(3);
        let sys = ShiftedSystem::new(&f, 3.7, SourceSolver::Direct).unwrap();
        let b: Vec<f64> = (0..f.dim()).map(|i| (i as f64 * 0.37).cos()).collect();
        let x = sys.solve(&b, &vec![0.0; f.dim()], &Deflation::new()).unwrap();
        let r: Vec<f64> = sys.operator().apply(&x).iter().zip(&b).map(|(p, q)| p - q).collect();
        assert!(crate::linalg::norm(&r) <= 1e-10 * crate::linalg::norm(&b));
    }

    #[test]
    fn exact_eigenvalue_shift_is_perturbed() {
        let f = forms(1);
        let e = coarse_eigensolve(&f, 0.0, 5).unwrap();
        let sys = ShiftedSystem::new(&f, e.values[2], SourceSolver::Direct).unwrap();
        assert!(sys.shift != e.values[2]);
        assert!((sys.shift - e.values[2]).abs() < 1e-7);
    }

    #[test]
    fn gauss_seidel_reduces_residual_from_prolonged_guess() {
        let meshes = refine_hierarchy(make_octahedron(), 2, &UnitSphere).unwrap();
        let coarse = assemble(&meshes[1]).unwrap();
        let fine = assemble(&meshes[2]).unwrap();
        let p = crate::transfer::build_prolongation(&meshes[1], &meshes[2]).unwrap();
        let e = coarse_eigensolve(&coarse, 0.0, 4).unwrap();
        let f0 = p.matrix.spmv(&e.vectors[1]).unwrap();
        let rhs: Vec<f64> = fine.mass.spmv(&f0).unwrap().iter().map(|v| v * e.values[1]).collect();
        let sys = ShiftedSystem::new(&fine, 0.0, SourceSolver::GaussSeidel { sweeps: 1 }).unwrap();
        let x = sys.solve(&rhs, &f0, &Deflation::new()).unwrap();
        let res = |x: &[f64]| {
            let ax = sys.operator().apply(x);
            crate::linalg::norm(&ax.iter().zip(&rhs).map(|(p, q)| p - q).collect::<Vec<_>>())
        };
        assert!(res(&x) < res(&f0));
    }
}
