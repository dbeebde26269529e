use super::{EigenSet, SolverError};

/// Adjacent sorted eigenvalues start a new cluster when their gap exceeds
/// this fraction of the larger magnitude (or of 1, near zero).
pub const CLUSTER_REL_GAP: f64 = 0.15;

/// Which computed eigenpairs span the enrichment space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnrichmentPolicy {
    /// The `size` consecutive indices ending at `target` (0-based).
    Window { target: usize, size: usize },
    /// The `k` largest of the computed pairs.
    Largest { k: usize },
    /// Pairs with `|λ - μ| < tol`, nearest first, at most `cap` of them.
    /// Without `tol` the default cluster tolerance is used.
    NearShift { tol: Option<f64>, cap: usize },
}

impl EnrichmentPolicy {
    /// Whether the index set is recomputed after every cycle.
    pub fn is_adaptive(&self) -> bool {
        !matches!(self, EnrichmentPolicy::Window { .. })
    }
}

/// Groups ascending `values` by single linkage with relative gap
/// `rel_gap`. Returns index ranges.
pub fn clusters(values: &[f64], rel_gap: f64) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::new();
    if values.is_empty() {
        return out;
    }
    let mut start = 0;
    for k in 1..values.len() {
        let gap = values[k] - values[k - 1];
        let scale = values[k].abs().max(values[k - 1].abs()).max(1.0);
        if gap > rel_gap * scale {
            out.push(start..k);
            start = k;
        }
    }
    out.push(start..values.len());
    out
}

/// Half the largest gap between adjacent clusters of ascending `values`.
/// Infinite when there is a single cluster.
pub fn cluster_tolerance(values: &[f64]) -> f64 {
    let cl = clusters(values, CLUSTER_REL_GAP);
    cl.windows(2)
        .map(|w| values[w[1].start] - values[w[0].end - 1])
        .fold(None, |m: Option<f64>, g| Some(m.map_or(g, |m| m.max(g))))
        .map_or(f64::INFINITY, |g| 0.5 * g)
}

/// Ascending index set selected by `policy` from the pairs of `set`.
pub fn select_enrichment(set: &EigenSet, policy: EnrichmentPolicy) -> Result<Vec<usize>, SolverError> {
    let n = set.len();
    let picked: Vec<usize> = match policy {
        EnrichmentPolicy::Window { target, size } => {
            if target >= n {
                return Err(SolverError::Config(format!(
                    "window target {target} outside the {n} computed pairs"
                )));
            }
            (target + 1 - size.min(target + 1)..=target).collect()
        }
        EnrichmentPolicy::Largest { k } => (n - k.min(n)..n).collect(),
        EnrichmentPolicy::NearShift { tol, cap } => {
            let tol = tol.unwrap_or_else(|| cluster_tolerance(&set.unshifted()));
            let mut near: Vec<usize> = (0..n).filter(|&i| set.values[i].abs() < tol).collect();
            near.sort_by(|&a, &b| set.values[a].abs().total_cmp(&set.values[b].abs()).then(a.cmp(&b)));
            near.truncate(cap);
            near.sort_unstable();
            near
        }
    };
    if picked.is_empty() {
        return Err(SolverError::EmptyEnrichment);
    }
    Ok(picked)
}
