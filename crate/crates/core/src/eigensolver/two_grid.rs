use super::{
    coarse_eigensolve, m_normalized, pencil_quotient, Basis, Deflation, EigenSet, Hierarchy, ShiftedSystem,
    SolverError, SourceSolver, KERNEL_TOL,
};
use crate::assembly::FemForms;
use crate::linalg::SparseMatrix;

/// Result of one two-grid correction.
#[derive(Debug, Clone)]
pub struct TwoGridPair {
    /// `RQ(A - μM) + μ`.
    pub value: f64,
    /// `RQ(A - μM)`, the coarse datum for a following level.
    pub pencil_value: f64,
    /// `M`-normalized fine iterate.
    pub vector: Vec<f64>,
}

/// Corrects the coarse pair `index` of `coarse` on the fine level by solving
/// `(A_h - (μ + λ_H) M_h) u = M_h P u_H`, keeping the iterate `M`-orthogonal
/// to `deflation`.
pub fn two_grid(
    coarse: &EigenSet,
    index: usize,
    p: &SparseMatrix,
    fine: &FemForms,
    method: SourceSolver,
    deflation: &Deflation,
) -> Result<TwoGridPair, SolverError> {
    let (lambda_h, u_h) = match (coarse.values.get(index), coarse.vectors.get(index)) {
        (Some(l), Some(u)) => (*l, u),
        _ => return Err(SolverError::Config(format!("no coarse pair {index}"))),
    };
    correct(lambda_h, u_h, coarse.shift, p, fine, method, deflation)
}

fn correct(
    lambda_h: f64,
    u_h: &[f64],
    shift: f64,
    p: &SparseMatrix,
    fine: &FemForms,
    method: SourceSolver,
    deflation: &Deflation,
) -> Result<TwoGridPair, SolverError> {
    let f = p.spmv(u_h)?;
    let sigma = shift + lambda_h;
    let mut u = if sigma.abs() <= KERNEL_TOL {
        f
    } else {
        let rhs = fine.mass.spmv(&f)?;
        if rhs.iter().all(|&v| v == 0.0) {
            return Err(SolverError::Breakdown("zero right-hand side".into()));
        }
        ShiftedSystem::new(fine, sigma, method)?.solve(&rhs, &f, deflation)?
    };
    deflation.apply(&mut u);
    let u = m_normalized(u, &fine.mass, "two-grid iterate")?;
    let pencil_value = pencil_quotient(fine, &u, shift)?;
    Ok(TwoGridPair { value: pencil_value + shift, pencil_value, vector: u })
}

/// Approximations on one level, in eigenpair index order.
#[derive(Debug, Clone)]
pub struct LevelValues {
    pub level: usize,
    pub dofs: usize,
    /// Unshifted eigenvalue approximations.
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct CascadeResult {
    pub levels: Vec<LevelValues>,
    /// Finest-level pairs sorted ascending, values stored relative to the
    /// shift.
    pub finest: EigenSet,
}

/// Applies the two-grid correction level by level, feeding each level's
/// pairs forward as the next coarse data. Pairs on a level are computed in
/// index order, each deflated against the ones accepted before it.
pub fn cascade_two_grid(
    hier: &Hierarchy,
    shift: f64,
    count: usize,
    method: SourceSolver,
) -> Result<CascadeResult, SolverError> {
    if hier.n_levels() < 2 {
        return Err(SolverError::Config("cascade needs at least two levels".into()));
    }
    let mut current = coarse_eigensolve(&hier.forms[0], shift, count)?;
    let mut levels = vec![LevelValues {
        level: 0,
        dofs: hier.dim(0),
        values: current.unshifted(),
        vectors: current.vectors.clone(),
    }];
    for k in 1..hier.n_levels() {
        let fine = &hier.forms[k];
        let p = &hier.prolongations[k - 1].matrix;
        let mut deflation = Deflation::new();
        let mut pencil = Vec::with_capacity(current.len());
        let mut values = Vec::with_capacity(current.len());
        for i in 0..current.len() {
            let r = correct(current.values[i], &current.vectors[i], shift, p, fine, method, &deflation)?;
            deflation.push(r.vector.clone(), &fine.mass)?;
            pencil.push(r.pencil_value);
            values.push(r.value);
        }
        let vectors = deflation.into_vectors();
        levels.push(LevelValues { level: k, dofs: hier.dim(k), values, vectors: vectors.clone() });
        current = EigenSet { values: pencil, vectors, basis: Basis::Nodal { level: k }, shift };
    }
    let mut order: Vec<usize> = (0..current.len()).collect();
    order.sort_by(|&a, &b| current.values[a].total_cmp(&current.values[b]).then(a.cmp(&b)));
    let finest = EigenSet {
        values: order.iter().map(|&i| current.values[i]).collect(),
        vectors: order.iter().map(|&i| current.vectors[i].clone()).collect(),
        basis: current.basis,
        shift,
    };
    Ok(CascadeResult { levels, finest })
}
