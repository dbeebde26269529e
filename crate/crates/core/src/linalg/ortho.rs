use super::{dot, LinalgError, RowOperator, SparseMatrix};

/// A column whose `M`-norm after projection falls below this fraction of
/// its original `M`-norm is treated as linearly dependent.
pub const DROP_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct Orthonormalized {
    pub vectors: Vec<Vec<f64>>,
    /// Input positions of the kept vectors.
    pub kept: Vec<usize>,
    /// Input positions of the dropped vectors.
    pub dropped: Vec<usize>,
}

/// Modified Gram-Schmidt in the `M` inner product with one
/// reorthogonalization pass, dropping dependent columns.
pub fn b_orthonormalize(vectors: &[Vec<f64>], m: &SparseMatrix) -> Result<Orthonormalized, LinalgError> {
    b_orthonormalize_tol(vectors, m, DROP_TOL)
}

pub fn b_orthonormalize_tol(
    vectors: &[Vec<f64>],
    m: &SparseMatrix,
    drop_tol: f64,
) -> Result<Orthonormalized, LinalgError> {
    let n = m.nrows();
    let mut out: Vec<Vec<f64>> = Vec::new();
    let mut m_out: Vec<Vec<f64>> = Vec::new();
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for (k, v) in vectors.iter().enumerate() {
        if v.len() != n {
            return Err(LinalgError::DimensionMismatch {
                expected: (n, 1),
                got: (v.len(), 1),
            });
        }
        let mut w = v.clone();
        let mut mw = m.spmv(&w)?;
        let norm0 = dot(&w, &mw).max(0.0).sqrt();
        if norm0 == 0.0 || !norm0.is_finite() {
            dropped.push(k);
            continue;
        }
        for _pass in 0..2 {
            for (q, mq) in out.iter().zip(&m_out) {
                let c = dot(mq, &w);
                w.iter_mut().zip(q).for_each(|(wi, qi)| *wi -= c * qi);
            }
            mw = m.spmv(&w)?;
        }
        let norm1 = dot(&w, &mw).max(0.0).sqrt();
        if norm1 <= drop_tol * norm0 {
            dropped.push(k);
            continue;
        }
        w.iter_mut().for_each(|x| *x /= norm1);
        mw.iter_mut().for_each(|x| *x /= norm1);
        out.push(w);
        m_out.push(mw);
        kept.push(k);
    }
    Ok(Orthonormalized { vectors: out, kept, dropped })
}

/// `vᵀ (A - μM) v / vᵀ M v + μ`, i.e. the Rayleigh quotient of `A`
/// evaluated through the shifted pencil.
pub fn rayleigh_quotient(
    a: &SparseMatrix,
    m: &SparseMatrix,
    v: &[f64],
    shift: f64,
) -> Result<f64, LinalgError> {
    let op = super::ShiftedOperator::new(a, m, shift)?;
    let den = m.bilinear(v, v);
    if !(den > 0.0) {
        return Err(LinalgError::ZeroVector);
    }
    let num = dot(v, &op.apply(v));
    Ok(num / den + shift)
}

/// Removes the `M`-components along `M`-orthonormal `basis` from `v`.
pub fn m_project_out(v: &mut [f64], basis: &[Vec<f64>], m: &SparseMatrix) -> Result<(), LinalgError> {
    for q in basis {
        let mq = m.spmv(q)?;
        let c = dot(&mq, v);
        v.iter_mut().zip(q).for_each(|(vi, qi)| *vi -= c * qi);
    }
    Ok(())
}

/// Scales `v` to unit `M`-norm.
pub fn m_normalize(v: &mut [f64], m: &SparseMatrix) -> Result<(), LinalgError> {
    let nrm = m.bilinear(v, v).max(0.0).sqrt();
    if nrm == 0.0 || !nrm.is_finite() {
        return Err(LinalgError::ZeroVector);
    }
    v.iter_mut().for_each(|x| *x /= nrm);
    Ok(())
}
