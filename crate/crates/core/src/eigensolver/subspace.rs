//! Reference eigensolver for levels too large for a dense solve: block
//! inverse iteration on `(A + M)` with Rayleigh-Ritz, which converges to
//! the lowest eigenpairs of the pencil.

use super::{Basis, EigenSet, Hierarchy, SolverError};
use crate::assembly::FemForms;
use crate::linalg::{dense_generalized_eig, dot, DirectSolver, ShiftedOperator};
use nalgebra::DMatrix;
use rayon::prelude::*;

/// Largest dimension handled by the dense path of [`level_eigensolve`].
pub const DENSE_LIMIT: usize = 1500;

const POLE: f64 = -1.0;
const MAX_ITER: usize = 400;
const RESIDUAL_TOL: f64 = 1e-10;

fn start_vector(n: usize, j: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let s = ((i as f64) * 12.9898 + (j as f64) * 78.233 + 1.0).sin() * 43758.5453;
            s - s.floor() - 0.5
        })
        .collect()
}

fn gram(a: &crate::linalg::SparseMatrix, x: &[Vec<f64>]) -> Result<DMatrix<f64>, SolverError> {
    let ax: Vec<Vec<f64>> = x.par_iter().map(|v| a.spmv(v)).collect::<Result<_, _>>()?;
    let b = x.len();
    let mut g = DMatrix::zeros(b, b);
    for i in 0..b {
        for j in i..b {
            let v = dot(&x[i], &ax[j]);
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    Ok(g)
}

fn block_size(count: usize, n: usize) -> usize {
    (count + (count / 2).max(8)).min(n)
}

/// Subspace iteration from the given block. Returns all Ritz pairs of the
/// final block, unshifted, ascending.
fn iterate_block(forms: &FemForms, mut x: Vec<Vec<f64>>, count: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>), SolverError> {
    let n = forms.dim();
    let block = x.len();
    let op = ShiftedOperator::new(&forms.stiffness, &forms.mass, POLE)?;
    let solver = DirectSolver::factorize(&op.materialize())?;
    let mut values = vec![0.0; block];
    for iter in 0..MAX_ITER {
        x = x
            .par_iter()
            .map(|v| forms.mass.spmv(v).map_err(SolverError::from).and_then(|mv| Ok(solver.solve(&mv)?)))
            .collect::<Result<_, _>>()?;
        let ka = gram(&forms.stiffness, &x)?;
        let km = gram(&forms.mass, &x)?;
        let eig = dense_generalized_eig(&ka, &km)?;
        x = (0..block)
            .into_par_iter()
            .map(|k| {
                let mut v = vec![0.0; n];
                for (c, xi) in eig.vectors.column(k).iter().zip(&x) {
                    v.iter_mut().zip(xi).for_each(|(vi, xv)| *vi += c * xv);
                }
                v
            })
            .collect();
        values = eig.values.clone();
        let worst = (0..count)
            .into_par_iter()
            .map(|k| -> Result<f64, SolverError> {
                let ax = forms.stiffness.spmv(&x[k])?;
                let mx = forms.mass.spmv(&x[k])?;
                let r: f64 = ax.iter().zip(&mx).map(|(a, m)| (a - values[k] * m).powi(2)).sum();
                let scale = dot(&ax, &ax).sqrt() + values[k].abs() * dot(&mx, &mx).sqrt();
                Ok(r.sqrt() / scale.max(f64::MIN_POSITIVE))
            })
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .fold(0.0, f64::max);
        if worst < RESIDUAL_TOL || iter + 1 == MAX_ITER {
            break;
        }
    }
    Ok((values, x))
}

fn to_set(values: &[f64], vectors: Vec<Vec<f64>>, count: usize, shift: f64, level: usize) -> EigenSet {
    EigenSet {
        values: values[..count].iter().map(|v| v - shift).collect(),
        vectors: vectors.into_iter().take(count).collect(),
        basis: Basis::Nodal { level },
        shift,
    }
}

/// Lowest `count` eigenpairs of `(A - μM, M)` by subspace iteration.
/// Values are returned relative to `shift` as in [`super::coarse_eigensolve`].
pub fn subspace_eigensolve(forms: &FemForms, shift: f64, count: usize) -> Result<EigenSet, SolverError> {
    let n = forms.dim();
    let count = count.min(n);
    if count == 0 {
        return Err(SolverError::Config("count must be positive".into()));
    }
    let x = (0..block_size(count, n)).map(|j| start_vector(n, j)).collect();
    let (values, vectors) = iterate_block(forms, x, count)?;
    Ok(to_set(&values, vectors, count, shift, 0))
}

/// Reference eigenpairs on every level of a hierarchy. Small levels are
/// solved densely; larger ones by subspace iteration started from the
/// prolonged block of the level below.
pub fn reference_eigensolve(hier: &Hierarchy, shift: f64, count: usize) -> Result<Vec<EigenSet>, SolverError> {
    reference_with_limit(hier, shift, count, DENSE_LIMIT)
}

fn reference_with_limit(
    hier: &Hierarchy,
    shift: f64,
    count: usize,
    dense_limit: usize,
) -> Result<Vec<EigenSet>, SolverError> {
    if count == 0 {
        return Err(SolverError::Config("count must be positive".into()));
    }
    let mut out = Vec::with_capacity(hier.n_levels());
    let mut block: Vec<Vec<f64>> = Vec::new();
    for k in 0..hier.n_levels() {
        let forms = &hier.forms[k];
        let n = forms.dim();
        let count_k = count.min(n);
        let size = block_size(count, n);
        let (values, vectors) = if n <= dense_limit {
            let dense = super::coarse_eigensolve(forms, 0.0, size)?;
            (dense.values, dense.vectors)
        } else {
            let mut x: Vec<Vec<f64>> = block
                .iter()
                .map(|v| hier.transfer(v, k - 1, k))
                .collect::<Result<_, _>>()?;
            for j in x.len()..size {
                x.push(start_vector(n, j));
            }
            x.truncate(size);
            iterate_block(forms, x, count_k)?
        };
        block = vectors.clone();
        out.push(to_set(&values, vectors, count_k, shift, k));
    }
    Ok(out)
}

/// Dense solve up to [`DENSE_LIMIT`] unknowns, subspace iteration above.
pub fn level_eigensolve(forms: &FemForms, shift: f64, count: usize) -> Result<EigenSet, SolverError> {
    if forms.dim() <= DENSE_LIMIT {
        super::coarse_eigensolve(forms, shift, count)
    } else {
        subspace_eigensolve(forms, shift, count)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::assemble;
    use crate::eigensolver::coarse_eigensolve;
    use crate::mesh::{make_octahedron, refine_hierarchy, UnitSphere};

    #[test]
    fn warm_started_levels_match_dense() {
        let coarse = crate::mesh::refined_coarse(&make_octahedron(), 2, &UnitSphere).unwrap();
        let hier = Hierarchy::build(coarse, 3, &UnitSphere).unwrap();
        let sets = reference_with_limit(&hier, 0.0, 10, 100).unwrap();
        for (k, set) in sets.iter().enumerate() {
            let dense = coarse_eigensolve(&hier.forms[k], 0.0, 10).unwrap();
            for (a, b) in dense.values.iter().zip(&set.values) {
                assert!((a - b).abs() < 1e-9 * (1.0 + a.abs()));
            }
        }
    }

    #[test]
    fn matches_dense_solve() {
        let mesh = &refine_hierarchy(make_octahedron(), 3, &UnitSphere).unwrap()[3];
        let forms = assemble(mesh).unwrap();
        let dense = coarse_eigensolve(&forms, 2.5, 16).unwrap();
        let sub = subspace_eigensolve(&forms, 2.5, 16).unwrap();
        for (a, b) in dense.values.iter().zip(&sub.values) {
            assert!((a - b).abs() < 1e-9 * (1.0 + a.abs()), "{a} {b}");
        }
        // M-orthonormal Ritz vectors
        for i in 0..16 {
            for j in 0..16 {
                let g = forms.mass.bilinear(&sub.vectors[i], &sub.vectors[j]);
                assert!((g - if i == j { 1.0 } else { 0.0 }).abs() < 1e-9);
            }
        }
    }
}
