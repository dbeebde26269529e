//! Bootstrap multigrid V-cycles and the full multigrid driver.
//!
//! A cycle on level `k` starts from the enriched eigenpairs of the previous
//! cycle (living on level `k - 1`). For each selected pair it runs source
//! problems `(A_s - μM_s) u = λ b_s(f, ·)` on levels `1..=k`. For `s = 1`
//! the right side pairs the enriched vector with level-1 test functions
//! (restriction of its mass-weighted values, or prolongation when it lives
//! on level 0); afterwards `f` is the prolonged level `s - 1` solution.
//! The level-`k` solutions are `M`-orthonormalized into the new enrichment
//! basis, the shift is updated, and the enriched coarse problem is solved
//! again.

use super::{
    build_enriched_system, coarse_eigensolve, enriched_eigensolve, pencil_quotient, select_enrichment, Basis,
    CoarseBlock, Deflation, EigenSet, EnrichmentPolicy, Hierarchy, ShiftedSystem, SolverError, SourceSolver,
    KERNEL_TOL,
};
use crate::linalg::b_orthonormalize;
use crate::transfer::restrict;
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ShiftPolicy {
    #[default]
    Fixed,
    /// `μ ← μ + mean of the enrichment Rayleigh quotients of A - μM`.
    Averaged,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BmgConfig {
    /// Eigenpairs kept from every coarse and enriched solve.
    pub count: usize,
    pub policy: EnrichmentPolicy,
    pub method: SourceSolver,
    /// Initial shift.
    pub shift: f64,
    pub shift_policy: ShiftPolicy,
    pub coarse_block: CoarseBlock,
}

/// `μ_prev + mean(quotients)`, or `μ_prev` for a fixed shift.
pub fn update_shift(shift: f64, quotients: &[f64], policy: ShiftPolicy) -> f64 {
    match policy {
        ShiftPolicy::Fixed => shift,
        ShiftPolicy::Averaged if quotients.is_empty() => shift,
        ShiftPolicy::Averaged => shift + quotients.iter().sum::<f64>() / quotients.len() as f64,
    }
}

#[derive(Debug, Clone)]
pub struct CycleRecord {
    pub level: usize,
    pub dofs: usize,
    pub shift_before: f64,
    pub shift_after: f64,
    /// Indices of the enriched pairs that were smoothed.
    pub enrichment: Vec<usize>,
    /// Positions in `enrichment` dropped as linearly dependent.
    pub dropped: Vec<usize>,
    /// Rayleigh quotients of `A` for the orthonormalized level-`k` iterates.
    pub quotients: Vec<f64>,
    /// Unshifted eigenvalues of the enriched problem after the cycle.
    pub enriched_values: Vec<f64>,
}

/// Driver state between cycles.
#[derive(Debug, Clone)]
pub struct BmgState<'h> {
    pub hier: &'h Hierarchy,
    pub config: BmgConfig,
    /// Level on which `pairs` and `basis` live.
    pub level: usize,
    pub shift: f64,
    /// Current enrichment index set.
    pub lambda: Vec<usize>,
    /// Current enriched eigenpairs as nodal vectors on `level`.
    pub pairs: EigenSet,
    /// Enrichment basis from the last cycle (empty before the first).
    pub basis: Vec<Vec<f64>>,
    pub history: Vec<CycleRecord>,
}

impl<'h> BmgState<'h> {
    /// Solves the coarse problem and selects the first enrichment set.
    pub fn new(hier: &'h Hierarchy, config: BmgConfig) -> Result<Self, SolverError> {
        if config.count == 0 {
            return Err(SolverError::Config("count must be positive".into()));
        }
        let pairs = coarse_eigensolve(&hier.forms[0], config.shift, config.count)?;
        let lambda = select_enrichment(&pairs, config.policy)?;
        Ok(BmgState {
            hier,
            config,
            level: 0,
            shift: config.shift,
            lambda,
            pairs,
            basis: Vec::new(),
            history: Vec::new(),
        })
    }

    /// `b(g, φ_j)` for the level-`s` hat functions `φ_j`, with `g` given on
    /// the current level. A finer `g` is paired exactly through the
    /// transposed prolongations instead of being interpolated first.
    fn mixed_mass(&self, g: &[f64], s: usize) -> Result<Vec<f64>, SolverError> {
        if self.level <= s {
            let f = self.hier.transfer(g, self.level, s)?;
            return Ok(self.hier.forms[s].mass.spmv(&f)?);
        }
        let mut r = self.hier.forms[self.level].mass.spmv(g)?;
        for l in (s..self.level).rev() {
            r = restrict(&self.hier.prolongations[l], &r)?;
        }
        Ok(r)
    }

    /// Source iterate for pair `i` carried up to level `k`.
    fn chain(&self, systems: &[ShiftedSystem<'_>], i: usize, k: usize) -> Result<Vec<f64>, SolverError> {
        let lambda = self.pairs.values[i];
        let g = &self.pairs.vectors[i];
        if lambda.abs() <= KERNEL_TOL && self.shift.abs() <= KERNEL_TOL {
            // constant kernel: the source problem has zero right side
            return self.hier.transfer(g, self.level, k);
        }
        let none = Deflation::new();
        let mut prev: Option<Vec<f64>> = None;
        for s in 1..=k {
            let forms = &self.hier.forms[s];
            let (f, mut rhs) = match prev.take() {
                None => {
                    let f = self.hier.transfer(g, self.level, s)?;
                    let rhs = self.mixed_mass(g, s)?;
                    (f, rhs)
                }
                Some(u) => {
                    let f = self.hier.prolongations[s - 1].matrix.spmv(&u)?;
                    let rhs = forms.mass.spmv(&f)?;
                    (f, rhs)
                }
            };
            rhs.iter_mut().for_each(|v| *v *= lambda);
            prev = Some(systems[s - 1].solve(&rhs, &f, &none)?);
        }
        Ok(prev.expect("k >= 1"))
    }

    /// One V-cycle ending on level `k`.
    pub fn vcycle(&mut self, k: usize) -> Result<&CycleRecord, SolverError> {
        if k == 0 || k >= self.hier.n_levels() {
            return Err(SolverError::Config(format!(
                "cycle level {k} outside 1..{}",
                self.hier.n_levels()
            )));
        }
        let shift = self.shift;
        let systems: Vec<ShiftedSystem<'_>> = (1..=k)
            .map(|s| ShiftedSystem::new(&self.hier.forms[s], shift, self.config.method))
            .collect::<Result<_, _>>()?;
        let iterates: Vec<Vec<f64>> = self
            .lambda
            .par_iter()
            .map(|&i| self.chain(&systems, i, k))
            .collect::<Result<_, _>>()?;

        let forms = &self.hier.forms[k];
        let orth = b_orthonormalize(&iterates, &forms.mass)?;
        if orth.vectors.is_empty() {
            return Err(SolverError::EmptyEnrichment);
        }
        let shifted_q: Vec<f64> = orth
            .vectors
            .iter()
            .map(|x| pencil_quotient(forms, x, shift))
            .collect::<Result<_, _>>()?;
        let new_shift = update_shift(shift, &shifted_q, self.config.shift_policy);

        let sys = build_enriched_system(self.hier, k, &orth.vectors, self.config.coarse_block)?;
        let coeffs = enriched_eigensolve(&sys, new_shift, self.config.count)?;
        let vectors = coeffs
            .vectors
            .iter()
            .map(|c| sys.expand(c))
            .collect::<Result<Vec<_>, _>>()?;
        let pairs = EigenSet {
            values: coeffs.values,
            vectors,
            basis: Basis::Nodal { level: k },
            shift: new_shift,
        };

        let record = CycleRecord {
            level: k,
            dofs: self.hier.dim(k),
            shift_before: shift,
            shift_after: new_shift,
            enrichment: self.lambda.clone(),
            dropped: orth.dropped.clone(),
            quotients: shifted_q.iter().map(|q| q + shift).collect(),
            enriched_values: pairs.unshifted(),
        };
        if self.config.policy.is_adaptive() {
            self.lambda = select_enrichment(&pairs, self.config.policy)?;
        }
        self.pairs = pairs;
        self.basis = orth.vectors;
        self.shift = new_shift;
        self.level = k;
        self.history.push(record);
        Ok(self.history.last().expect("just pushed"))
    }
}

#[derive(Debug, Clone)]
pub struct BmgResult {
    /// Unshifted coarse eigenvalues.
    pub coarse_values: Vec<f64>,
    pub cycles: Vec<CycleRecord>,
    /// Final enrichment basis on the finest level, in the order of the last
    /// cycle's enrichment set.
    pub basis: Vec<Vec<f64>>,
    /// Final enriched eigenpairs on the finest level.
    pub pairs: EigenSet,
    pub final_shift: f64,
}

fn finish(state: BmgState<'_>, coarse_values: Vec<f64>) -> BmgResult {
    BmgResult {
        coarse_values,
        cycles: state.history,
        basis: state.basis,
        pairs: state.pairs,
        final_shift: state.shift,
    }
}

/// Full multigrid: V-cycles ending on levels `1, 2, ..., K-1`.
pub fn bfmg(hier: &Hierarchy, config: BmgConfig) -> Result<BmgResult, SolverError> {
    if hier.n_levels() < 2 {
        return Err(SolverError::Config("at least two levels are required".into()));
    }
    let mut state = BmgState::new(hier, config)?;
    let coarse = state.pairs.unshifted();
    for k in 1..hier.n_levels() {
        state.vcycle(k)?;
    }
    Ok(finish(state, coarse))
}

/// A single V-cycle from the coarse solve to the finest level.
pub fn bmg(hier: &Hierarchy, config: BmgConfig) -> Result<BmgResult, SolverError> {
    if hier.n_levels() < 2 {
        return Err(SolverError::Config("at least two levels are required".into()));
    }
    let mut state = BmgState::new(hier, config)?;
    let coarse = state.pairs.unshifted();
    state.vcycle(hier.n_levels() - 1)?;
    Ok(finish(state, coarse))
}

/// The two-level scheme written out directly: coarse solve, selection,
/// fine source problems on level 1, orthonormalization, shift update and
/// enriched solve.
pub fn two_grid_bmg(hier: &Hierarchy, config: BmgConfig) -> Result<BmgResult, SolverError> {
    if hier.n_levels() < 2 {
        return Err(SolverError::Config("at least two levels are required".into()));
    }
    let coarse = coarse_eigensolve(&hier.forms[0], config.shift, config.count)?;
    let lambda = select_enrichment(&coarse, config.policy)?;
    let fine = &hier.forms[1];
    let p = &hier.prolongations[0].matrix;
    let system = ShiftedSystem::new(fine, config.shift, config.method)?;
    let mut iterates = Vec::with_capacity(lambda.len());
    for &i in &lambda {
        let f = p.spmv(&coarse.vectors[i])?;
        let l = coarse.values[i];
        let u = if l.abs() <= KERNEL_TOL && config.shift.abs() <= KERNEL_TOL {
            f
        } else {
            let rhs: Vec<f64> = fine.mass.spmv(&f)?.iter().map(|v| l * v).collect();
            system.solve(&rhs, &f, &Deflation::new())?
        };
        iterates.push(u);
    }
    let orth = b_orthonormalize(&iterates, &fine.mass)?;
    let q: Vec<f64> = orth
        .vectors
        .iter()
        .map(|x| pencil_quotient(fine, x, config.shift))
        .collect::<Result<_, _>>()?;
    let new_shift = update_shift(config.shift, &q, config.shift_policy);
    let sys = build_enriched_system(hier, 1, &orth.vectors, config.coarse_block)?;
    let coeffs = enriched_eigensolve(&sys, new_shift, config.count)?;
    let vectors = coeffs.vectors.iter().map(|c| sys.expand(c)).collect::<Result<Vec<_>, _>>()?;
    let pairs = EigenSet { values: coeffs.values, vectors, basis: Basis::Nodal { level: 1 }, shift: new_shift };
    let record = CycleRecord {
        level: 1,
        dofs: hier.dim(1),
        shift_before: config.shift,
        shift_after: new_shift,
        enrichment: lambda,
        dropped: orth.dropped,
        quotients: q.iter().map(|v| v + config.shift).collect(),
        enriched_values: pairs.unshifted(),
    };
    Ok(BmgResult {
        coarse_values: coarse.unshifted(),
        cycles: vec![record],
        basis: orth.vectors,
        pairs,
        final_shift: new_shift,
    })
}
