//! Exact sphere spectrum, cluster matching and convergence-rate fits.

use thiserror::Error;

/// Default relative tolerance for assigning computed values to clusters.
pub const DEFAULT_REL_TOL: f64 = 0.15;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ValidationError {
    #[error("rate fit needs at least 3 positive samples, got {0}")]
    TooFewSamples(usize),
    #[error("sample ({0}, {1}) is not finite")]
    NonFinite(f64, f64),
}

/// One eigenvalue `l(l+1)` of the unit sphere and its index range in the
/// sorted spectrum (1-based, inclusive).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactCluster {
    pub l: usize,
    pub value: f64,
    pub multiplicity: usize,
    pub first_index: usize,
    pub last_index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactSpectrum {
    pub clusters: Vec<ExactCluster>,
}

pub fn sphere_spectrum(l_max: usize) -> ExactSpectrum {
    let clusters = (0..=l_max)
        .map(|l| ExactCluster {
            l,
            value: (l * (l + 1)) as f64,
            multiplicity: 2 * l + 1,
            first_index: l * l + 1,
            last_index: (l + 1) * (l + 1),
        })
        .collect();
    ExactSpectrum { clusters }
}

impl ExactSpectrum {
    /// Exact eigenvalue carried by the 1-based index `j`.
    pub fn value_at(&self, j: usize) -> Option<f64> {
        self.clusters
            .iter()
            .find(|c| (c.first_index..=c.last_index).contains(&j))
            .map(|c| c.value)
    }

    pub fn cluster(&self, value: f64) -> Option<&ExactCluster> {
        self.clusters.iter().find(|c| c.value == value)
    }

    /// Smallest spectrum containing the lowest `n` eigenvalues.
    pub fn covering(n: usize) -> ExactSpectrum {
        let mut l = 0;
        while (l + 1) * (l + 1) < n {
            l += 1;
        }
        sphere_spectrum(l + 1)
    }
}

/// Relative distance used for cluster assignment. Distances to the zero
/// eigenvalue are absolute.
pub fn rel_dist(value: f64, exact: f64) -> f64 {
    (value - exact).abs() / exact.max(1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterMatch {
    pub l: usize,
    pub exact: f64,
    pub multiplicity: usize,
    pub matched: Vec<f64>,
    pub mean_rel_err: f64,
    pub max_rel_err: f64,
    /// The cluster's whole index range lies inside the computed range.
    pub covered: bool,
    pub loss: bool,
}

impl ClusterMatch {
    pub fn count(&self) -> usize {
        self.matched.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterReport {
    pub rel_tol: f64,
    pub clusters: Vec<ClusterMatch>,
    pub unmatched: Vec<f64>,
}

impl ClusterReport {
    pub fn get(&self, exact: f64) -> Option<&ClusterMatch> {
        self.clusters.iter().find(|c| c.exact == exact)
    }

    pub fn matched_count(&self, exact: f64) -> usize {
        self.get(exact).map_or(0, ClusterMatch::count)
    }

    pub fn has_loss(&self, exact: f64) -> bool {
        self.get(exact).is_some_and(|c| c.loss)
    }

    pub fn any_loss(&self) -> bool {
        self.clusters.iter().any(|c| c.loss)
    }
}

/// Assigns every computed value to the nearest exact eigenvalue when
/// within `rel_tol`. The computed list is taken to be the lowest
/// `values.len()` eigenvalues, so loss is only flagged for clusters whose
/// indices all fall inside that range.
pub fn match_spectrum(values: &[f64], exact: &ExactSpectrum, rel_tol: f64) -> ClusterReport {
    let mut matched: Vec<Vec<f64>> = vec![Vec::new(); exact.clusters.len()];
    let mut unmatched = Vec::new();
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    for &v in &sorted {
        let best = exact
            .clusters
            .iter()
            .enumerate()
            .map(|(k, c)| (k, rel_dist(v, c.value)))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match best {
            Some((k, d)) if d < rel_tol => matched[k].push(v),
            _ => unmatched.push(v),
        }
    }
    let n = values.len();
    let clusters = exact
        .clusters
        .iter()
        .zip(matched)
        .map(|(c, m)| {
            let errs: Vec<f64> = m.iter().map(|&v| rel_dist(v, c.value)).collect();
            let covered = c.last_index <= n;
            ClusterMatch {
                l: c.l,
                exact: c.value,
                multiplicity: c.multiplicity,
                mean_rel_err: if errs.is_empty() {
                    0.0
                } else {
                    errs.iter().sum::<f64>() / errs.len() as f64
                },
                max_rel_err: errs.iter().copied().fold(0.0, f64::max),
                covered,
                loss: covered && m.len() < c.multiplicity,
                matched: m,
            }
        })
        .collect();
    ClusterReport { rel_tol, clusters, unmatched }
}

/// Error of the smallest computed value assigned to the cluster at `exact`.
pub fn tracked_error(values: &[f64], exact: f64, rel_tol: f64) -> Option<f64> {
    values
        .iter()
        .copied()
        .filter(|&v| rel_dist(v, exact) < rel_tol)
        .min_by(f64::total_cmp)
        .map(|v| (v - exact).abs())
}

/// Least-squares fit of `error ~ C * DoF^(-rate)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    pub rate: f64,
    pub log_constant: f64,
    /// Euclidean norm of the log-space residual.
    pub residual: f64,
    pub samples: Vec<(f64, f64)>,
    pub excluded: Vec<(f64, f64)>,
    pub notes: Vec<String>,
}

pub fn fit_rate(samples: &[(f64, f64)]) -> Result<RateFit, ValidationError> {
    let mut kept = Vec::new();
    let mut excluded = Vec::new();
    let mut notes = Vec::new();
    for &(dof, err) in samples {
        if !dof.is_finite() || !err.is_finite() {
            return Err(ValidationError::NonFinite(dof, err));
        }
        if err > 0.0 && dof > 0.0 {
            kept.push((dof, err));
        } else {
            notes.push(format!("excluded non-positive sample at {dof} DoF (error {err:e})"));
            excluded.push((dof, err));
        }
    }
    if kept.len() < 3 {
        return Err(ValidationError::TooFewSamples(kept.len()));
    }
    let xs: Vec<f64> = kept.iter().map(|s| s.0.ln()).collect();
    let ys: Vec<f64> = kept.iter().map(|s| s.1.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(RateFit { rate: -slope, log_constant: intercept, residual, samples: kept, excluded, notes })
}

/// [`fit_rate`] with the first (coarsest) sample dropped.
pub fn fit_rate_excluding_coarsest(samples: &[(f64, f64)]) -> Result<RateFit, ValidationError> {
    let mut fit = fit_rate(samples.get(1..).unwrap_or(&[]))?;
    if let Some(&first) = samples.first() {
        fit.excluded.insert(0, first);
        fit.notes.insert(0, format!("coarsest level ({} DoF) excluded", first.0));
    }
    Ok(fit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn small_spectrum() {
        let s = sphere_spectrum(2);
        let pairs: Vec<(f64, usize)> = s.clusters.iter().map(|c| (c.value, c.multiplicity)).collect();
        assert_eq!(pairs, vec![(0.0, 1), (2.0, 3), (6.0, 5)]);
    }

    #[test]
    fn index_ranges() {
        let s = sphere_spectrum(8);
        let total: usize = s.clusters[..=6].iter().map(|c| c.multiplicity).sum();
        assert_eq!(total, 49);
        let range = |v: f64| {
            let c = s.cluster(v).unwrap();
            (c.first_index, c.last_index)
        };
        assert_eq!(range(30.0), (26, 36));
        assert_eq!(range(42.0), (37, 49));
        assert_eq!(range(56.0), (50, 64));
        assert_eq!(range(72.0), (65, 81));
        assert_eq!(s.cluster(30.0).unwrap().multiplicity, 11);
        assert_eq!(s.value_at(37), Some(42.0));
        assert_eq!(s.value_at(36), Some(30.0));
        for w in s.clusters.windows(2) {
            assert!(w[1].value > w[0].value);
            assert_eq!(w[1].multiplicity, w[0].multiplicity + 2);
        }
    }

    #[test]
    fn covering_spectrum() {
        assert_eq!(ExactSpectrum::covering(49).clusters.last().unwrap().l, 7);
        assert_eq!(ExactSpectrum::covering(1).clusters.len(), 2);
    }

    #[test]
    fn exact_values_match() {
        let s = sphere_spectrum(6);
        let values: Vec<f64> = (1..=49).map(|j| s.value_at(j).unwrap()).collect();
        let r = match_spectrum(&values, &s, DEFAULT_REL_TOL);
        assert!(r.unmatched.is_empty());
        assert!(!r.any_loss());
        for c in &r.clusters {
            assert_eq!(c.count(), c.multiplicity);
            assert_eq!(c.max_rel_err, 0.0);
        }
    }

    #[test]
    fn loss_is_flagged() {
        let s = sphere_spectrum(6);
        let mut values: Vec<f64> = (1..=25).map(|j| s.value_at(j).unwrap()).collect();
        values.extend([29.5; 8]);
        values.extend([100.0; 3]);
        values.extend([41.0; 4]);
        values.extend([50.0; 9]);
        let r = match_spectrum(&values, &s, DEFAULT_REL_TOL);
        assert_eq!(r.matched_count(30.0), 8);
        assert_eq!(r.matched_count(42.0), 4);
        assert!(r.has_loss(30.0) && r.has_loss(42.0) && !r.has_loss(20.0));
        assert_eq!(r.unmatched.len(), 3 + 9);
    }

    #[test]
    fn uncovered_clusters_are_not_flagged() {
        let s = sphere_spectrum(3);
        let r = match_spectrum(&[0.0, 2.0, 2.0, 2.0, 6.0], &s, 0.1);
        assert!(!r.has_loss(6.0));
        assert!(!r.get(6.0).unwrap().covered);
    }

    #[test]
    fn tracked_error_uses_smallest_member() {
        assert_eq!(tracked_error(&[2.2, 2.05, 6.1], 2.0, 0.15), Some(2.05 - 2.0));
        assert_eq!(tracked_error(&[6.1], 2.0, 0.15), None);
    }

    #[test]
    fn exact_power_laws() {
        for rate in [1.0, 0.5] {
            let samples: Vec<(f64, f64)> =
                [66.0f64, 258.0, 1026.0, 4098.0].iter().map(|&n| (n, 3.0 * n.powf(-rate))).collect();
            let fit = fit_rate(&samples).unwrap();
            assert!((fit.rate - rate).abs() < 1e-10);
            assert!(fit.residual < 1e-10);
        }
    }

    #[test]
    fn excludes_exact_hits() {
        let fit = fit_rate(&[(10.0, 1.0), (20.0, 0.0), (40.0, 0.25), (80.0, 0.125)]).unwrap();
        assert_eq!(fit.excluded.len(), 1);
        assert_eq!(fit.notes.len(), 1);
        assert!(matches!(fit_rate(&[(1.0, 1.0), (2.0, 0.5)]), Err(ValidationError::TooFewSamples(2))));
    }

    #[test]
    fn coarsest_exclusion() {
        let samples = [(6.0, 9.0), (18.0, 1.0), (66.0, 0.25), (258.0, 0.0625)];
        let fit = fit_rate_excluding_coarsest(&samples).unwrap();
        assert_eq!(fit.samples.len(), 3);
        assert_eq!(fit.excluded[0], (6.0, 9.0));
    }

    proptest! {
        #[test]
        fn scaling_leaves_rate(scale in 1e-6f64..1e6, rate in 0.1f64..2.0, noise in proptest::collection::vec(0.8f64..1.25, 4)) {
            let samples: Vec<(f64, f64)> = [18.0f64, 66.0, 258.0, 1026.0]
                .iter()
                .zip(&noise)
                .map(|(&n, z)| (n, z * n.powf(-rate)))
                .collect();
            let scaled: Vec<(f64, f64)> = samples.iter().map(|&(n, e)| (n, scale * e)).collect();
            let a = fit_rate(&samples).unwrap();
            let b = fit_rate(&scaled).unwrap();
            prop_assert!((a.rate - b.rate).abs() < 1e-9);
        }

        #[test]
        fn matching_ignores_order(mut values in proptest::collection::vec(0.0f64..60.0, 1..40), seed in 0usize..1000) {
            let s = sphere_spectrum(7);
            let a = match_spectrum(&values, &s, 0.1);
            let n = values.len();
            values.rotate_left(seed % n);
            values.reverse();
            let b = match_spectrum(&values, &s, 0.1);
            prop_assert_eq!(a, b);
        }
    }
}
