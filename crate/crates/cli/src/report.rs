//! Serializable experiment report.

use crate::config::ExperimentConfig;
use serde::{Deserialize, Serialize};
use surfeig::validation::{ClusterReport, RateFit};

/// Bumped whenever a field changes meaning.
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub format_version: u32,
    pub config: ExperimentConfig,
    pub notes: Vec<String>,
    pub levels: Vec<LevelReport>,
    /// Cluster matching of the finest level's values.
    pub clusters: ClusterSummary,
    pub rates: Vec<RateReport>,
    pub estimator: Vec<EstimatorRecord>,
    /// Decay of the estimator with DoF, one fit per target.
    pub estimator_rates: Vec<RateReport>,
    pub cycles: Vec<CycleSummary>,
    pub timings: Vec<Timing>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub level: usize,
    pub dofs: usize,
    pub h_max: f64,
    /// Eigenvalue approximations on this level, ascending.
    pub values: Vec<f64>,
    /// Values used for convergence tracking. For the bootstrap pipelines
    /// these are the Rayleigh quotients of the level's source iterates;
    /// otherwise they equal `values`.
    pub tracked: Vec<f64>,
    pub shift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterEntry {
    pub l: usize,
    pub exact: f64,
    pub multiplicity: usize,
    pub matched: usize,
    pub mean_rel_err: f64,
    pub max_rel_err: f64,
    pub covered: bool,
    pub loss: bool,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub rel_tol: f64,
    pub clusters: Vec<ClusterEntry>,
    pub unmatched: Vec<f64>,
}

impl From<&ClusterReport> for ClusterSummary {
    fn from(r: &ClusterReport) -> Self {
        ClusterSummary {
            rel_tol: r.rel_tol,
            clusters: r
                .clusters
                .iter()
                .map(|c| ClusterEntry {
                    l: c.l,
                    exact: c.exact,
                    multiplicity: c.multiplicity,
                    matched: c.count(),
                    mean_rel_err: c.mean_rel_err,
                    max_rel_err: c.max_rel_err,
                    covered: c.covered,
                    loss: c.loss,
                    values: c.matched.clone(),
                })
                .collect(),
            unmatched: r.unmatched.clone(),
        }
    }
}

impl ClusterSummary {
    pub fn get(&self, exact: f64) -> Option<&ClusterEntry> {
        self.clusters.iter().find(|c| c.exact == exact)
    }

    pub fn matched(&self, exact: f64) -> usize {
        self.get(exact).map_or(0, |c| c.matched)
    }

    pub fn loss(&self, exact: f64) -> bool {
        self.get(exact).is_some_and(|c| c.loss)
    }
}

/// `error ~ C DoF^(-rate)`; `rate` is absent when too few levels resolve
/// the target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub target: f64,
    pub rate: Option<f64>,
    pub residual: Option<f64>,
    /// `(dofs, error)` pairs used in the fit.
    pub samples: Vec<(f64, f64)>,
    pub excluded: Vec<(f64, f64)>,
    pub notes: Vec<String>,
}

impl RateReport {
    pub fn from_fit(target: f64, fit: RateFit) -> Self {
        RateReport {
            target,
            rate: Some(fit.rate),
            residual: Some(fit.residual),
            samples: fit.samples,
            excluded: fit.excluded,
            notes: fit.notes,
        }
    }

    pub fn failed(target: f64, samples: Vec<(f64, f64)>, note: String) -> Self {
        RateReport { target, rate: None, residual: None, samples, excluded: Vec::new(), notes: vec![note] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorRecord {
    pub level: usize,
    pub dofs: usize,
    pub target: f64,
    /// Eigenvalue approximation of the estimated vector.
    pub value: f64,
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleSummary {
    pub level: usize,
    pub dofs: usize,
    pub shift_before: f64,
    pub shift_after: f64,
    /// 1-based indices of the smoothed pairs.
    pub enrichment: Vec<usize>,
    pub dropped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub stage: String,
    pub seconds: f64,
}

impl ExperimentReport {
    pub fn rate(&self, target: f64) -> Option<f64> {
        self.rates.iter().find(|r| r.target == target).and_then(|r| r.rate)
    }

    pub fn finest(&self) -> &LevelReport {
        self.levels.last().expect("a report has at least one level")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        let v: serde_json::Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
        match v.get("format_version").and_then(|x| x.as_u64()) {
            Some(x) if x == u64::from(FORMAT_VERSION) => {}
            Some(x) => return Err(format!("report format version {x}, expected {FORMAT_VERSION}")),
            None => return Err("missing format_version".into()),
        }
        serde_json::from_value(v).map_err(|e| e.to_string())
    }
}
