//! Rayleigh-Ritz on the coarse space enriched by fine vectors.
//!
//! Two block layouts are offered. [`CoarseBlock::Galerkin`] builds every
//! block from the fine forms and first removes from each enrichment vector
//! its component in the prolonged coarse space; this is a Rayleigh-Ritz
//! projection onto `P V_H + span(U)` and its mass block is always positive
//! definite. [`CoarseBlock::Assembled`] uses the coarse-grid `A_H`, `M_H` in
//! the top-left block and the raw enrichment vectors elsewhere. Because
//! `M_H` differs from `Pᵀ M_h P` for curved surfaces, that mass block can be
//! indefinite once the enrichment nearly contains a prolonged coarse
//! function (the constant, for instance).

use super::{Basis, EigenSet, Hierarchy, SolverError};
use crate::linalg::{b_orthonormalize_tol, cholesky, dense_generalized_eig, dot, LinalgError, SparseMatrix};
use nalgebra::{DMatrix, DVector};

/// Enrichment vectors whose `M`-norm outside the prolonged coarse space is
/// below this fraction of their norm are discarded in Galerkin mode.
pub const DEPENDENCE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CoarseBlock {
    #[default]
    Galerkin,
    Assembled,
}

#[derive(Debug, Clone)]
pub struct EnrichedSystem {
    pub level: usize,
    pub n_coarse: usize,
    pub mode: CoarseBlock,
    /// Prolongation from level 0 to `level`.
    pub p: SparseMatrix,
    /// Fine-space columns after the coarse block.
    pub u_block: Vec<Vec<f64>>,
    pub a_block: DMatrix<f64>,
    pub m_block: DMatrix<f64>,
    /// Input vectors discarded as dependent on the coarse space.
    pub dropped: Vec<usize>,
    /// Relative `M`-norm of each input vector outside the prolonged coarse
    /// space.
    pub remainders: Vec<f64>,
}

impl EnrichedSystem {
    pub fn dim(&self) -> usize {
        self.n_coarse + self.u_block.len()
    }

    /// Maps block coordinates to nodal values on the fine level.
    pub fn expand(&self, coeffs: &[f64]) -> Result<Vec<f64>, SolverError> {
        if coeffs.len() != self.dim() {
            return Err(SolverError::Config(format!(
                "{} coefficients for an enriched system of size {}",
                coeffs.len(),
                self.dim()
            )));
        }
        let mut v = self.p.spmv(&coeffs[..self.n_coarse])?;
        for (c, u) in coeffs[self.n_coarse..].iter().zip(&self.u_block) {
            v.iter_mut().zip(u).for_each(|(vi, ui)| *vi += c * ui);
        }
        Ok(v)
    }
}

/// Builds the block matrices on `level` for enrichment vectors `x` (assumed
/// `M`-orthonormal).
pub fn build_enriched_system(
    hier: &Hierarchy,
    level: usize,
    x: &[Vec<f64>],
    mode: CoarseBlock,
) -> Result<EnrichedSystem, SolverError> {
    if level >= hier.n_levels() {
        return Err(SolverError::Config(format!("level {level} is not in the hierarchy")));
    }
    let n = hier.dim(level);
    if let Some(bad) = x.iter().position(|v| v.len() != n) {
        return Err(SolverError::Config(format!(
            "enrichment vector {bad} has length {}, level {level} has {n} nodes",
            x[bad].len()
        )));
    }
    let forms = &hier.forms[level];
    let (a, m) = (&forms.stiffness, &forms.mass);
    let p = hier.from_coarsest[level].clone();
    let pt = p.transpose();
    let ap = a.matmul(&p)?;
    let mp = m.matmul(&p)?;
    let ptap = pt.matmul(&ap)?.to_dense();
    let ptmp = pt.matmul(&mp)?.to_dense();
    let n0 = p.ncols();

    // component of each x_j outside range(P), in the M inner product
    let g_chol = cholesky(&ptmp)?;
    let mut residuals = Vec::with_capacity(x.len());
    let mut remainders = Vec::with_capacity(x.len());
    for v in x {
        let b = DVector::from_vec(pt.spmv(&m.spmv(v)?)?);
        let c = g_chol.solve_lower_triangular(&b).expect("nonzero diagonal");
        let c = g_chol.tr_solve_lower_triangular(&c).expect("nonzero diagonal");
        let pc = p.spmv(c.as_slice())?;
        let r: Vec<f64> = v.iter().zip(&pc).map(|(vi, pi)| vi - pi).collect();
        let norm_v = m.bilinear(v, v).max(0.0).sqrt();
        let norm_r = m.bilinear(&r, &r).max(0.0).sqrt();
        remainders.push(if norm_v > 0.0 { norm_r / norm_v } else { 0.0 });
        residuals.push(r);
    }

    let (top_a, top_m, u_block, dropped) = match mode {
        CoarseBlock::Galerkin => {
            let candidates: Vec<usize> =
                (0..x.len()).filter(|&j| remainders[j] >= DEPENDENCE_TOL).collect();
            let cand_vecs: Vec<Vec<f64>> = candidates.iter().map(|&j| residuals[j].clone()).collect();
            let orth = b_orthonormalize_tol(&cand_vecs, m, DEPENDENCE_TOL)?;
            let kept: Vec<usize> = orth.kept.iter().map(|&k| candidates[k]).collect();
            let dropped = (0..x.len()).filter(|j| !kept.contains(j)).collect();
            (ptap, ptmp, orth.vectors, dropped)
        }
        CoarseBlock::Assembled => (
            hier.forms[0].stiffness.to_dense(),
            hier.forms[0].mass.to_dense(),
            x.to_vec(),
            Vec::new(),
        ),
    };

    let q = u_block.len();
    let au: Vec<Vec<f64>> = u_block.iter().map(|u| a.spmv(u)).collect::<Result<_, _>>()?;
    let mu: Vec<Vec<f64>> = u_block.iter().map(|u| m.spmv(u)).collect::<Result<_, _>>()?;
    let mut a_block = DMatrix::zeros(n0 + q, n0 + q);
    let mut m_block = DMatrix::zeros(n0 + q, n0 + q);
    a_block.view_mut((0, 0), (n0, n0)).copy_from(&top_a);
    m_block.view_mut((0, 0), (n0, n0)).copy_from(&top_m);
    for j in 0..q {
        let pa = pt.spmv(&au[j])?;
        let pm = pt.spmv(&mu[j])?;
        for i in 0..n0 {
            a_block[(i, n0 + j)] = pa[i];
            a_block[(n0 + j, i)] = pa[i];
            m_block[(i, n0 + j)] = pm[i];
            m_block[(n0 + j, i)] = pm[i];
        }
        for i in 0..=j {
            let av = dot(&u_block[i], &au[j]);
            let mv = dot(&u_block[i], &mu[j]);
            a_block[(n0 + i, n0 + j)] = av;
            a_block[(n0 + j, n0 + i)] = av;
            m_block[(n0 + i, n0 + j)] = mv;
            m_block[(n0 + j, n0 + i)] = mv;
        }
    }
    Ok(EnrichedSystem {
        level,
        n_coarse: n0,
        mode,
        p,
        u_block,
        a_block,
        m_block,
        dropped,
        remainders,
    })
}

/// Lowest `count` eigenpairs of `(A_block - μ M_block) c = λ M_block c`,
/// in block coordinates.
pub fn enriched_eigensolve(sys: &EnrichedSystem, shift: f64, count: usize) -> Result<EigenSet, SolverError> {
    let shifted = &sys.a_block - shift * &sys.m_block;
    let eig = match dense_generalized_eig(&shifted, &sys.m_block) {
        Ok(e) => e,
        Err(LinalgError::NotPositiveDefinite(_)) => {
            let mut order: Vec<usize> = (0..sys.remainders.len()).collect();
            order.sort_by(|&a, &b| sys.remainders[a].total_cmp(&sys.remainders[b]));
            let mut near: Vec<usize> = order.iter().copied().filter(|&j| sys.remainders[j] < 0.1).collect();
            if near.is_empty() {
                near.extend(order.first());
            }
            return Err(SolverError::IndefiniteEnrichedMass { near_dependent: near });
        }
        Err(e) => return Err(e.into()),
    };
    let count = count.min(sys.dim());
    Ok(EigenSet {
        values: eig.values[..count].to_vec(),
        vectors: (0..count).map(|k| eig.vectors.column(k).iter().copied().collect()).collect(),
        basis: Basis::Enriched {
            level: sys.level,
            coarse_dim: sys.n_coarse,
            enrich_dim: sys.u_block.len(),
        },
        shift,
    })
}
