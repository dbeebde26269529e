//! Runs one configured experiment and collects the report.

use crate::config::{ExperimentConfig, MeshFamily, Pipeline};
use crate::report::{
    ClusterSummary, CycleSummary, EstimatorRecord, ExperimentReport, LevelReport, RateReport, Timing, FORMAT_VERSION,
};
use crate::CliError;
use std::time::Instant;
use surfeig::eigensolver::{
    cascade_two_grid, coarse_eigensolve, reference_eigensolve, two_grid, BmgConfig, BmgState, Deflation, EigenSet,
    Hierarchy,
};
use surfeig::estimator::estimate;
use surfeig::mesh::load_off;
use surfeig::mesh::{make_icosahedron, make_octahedron, mesh_stats, refined_coarse, UnitSphere};
use surfeig::validation::{
    fit_rate, fit_rate_excluding_coarsest, match_spectrum, rel_dist, tracked_error, ExactSpectrum,
};

/// Approximations produced on one level.
#[derive(Debug, Clone)]
pub struct LevelSolution {
    pub level: usize,
    /// Ascending eigenvalue approximations.
    pub values: Vec<f64>,
    /// Values followed for convergence, paired with `vectors`.
    pub tracked: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub shift: f64,
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

fn plain(level: usize, values: Vec<f64>, vectors: Vec<Vec<f64>>, shift: f64) -> LevelSolution {
    LevelSolution { level, values: sorted(values.clone()), tracked: values, vectors, shift }
}

fn from_set(level: usize, set: &EigenSet) -> LevelSolution {
    plain(level, set.unshifted(), set.vectors.clone(), set.shift)
}

pub fn build_hierarchy(cfg: &ExperimentConfig) -> Result<Hierarchy, CliError> {
    let base = match cfg.mesh {
        MeshFamily::Octahedron => make_octahedron(),
        MeshFamily::Icosahedron => make_icosahedron(),
        MeshFamily::File => {
            let path = cfg.mesh_file.as_deref().ok_or_else(|| CliError::Config("mesh_file missing".into()))?;
            load_off(path, Some(&UnitSphere)).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
    };
    let coarse = refined_coarse(&base, cfg.coarse_refinements, &UnitSphere)
        .map_err(|e| CliError::numerical("mesh", e.into()))?;
    Hierarchy::build(coarse, cfg.levels, &UnitSphere).map_err(|e| CliError::numerical("hierarchy", e))
}

fn bmg_config(cfg: &ExperimentConfig) -> BmgConfig {
    BmgConfig {
        count: cfg.count,
        policy: cfg.enrichment_policy(),
        method: cfg.source_solver(),
        shift: cfg.shift,
        shift_policy: cfg.shift_policy(),
        coarse_block: cfg.coarse_block(),
    }
}

/// Level solutions plus the per-cycle records of the bootstrap pipelines.
pub fn solve(
    cfg: &ExperimentConfig,
    hier: &Hierarchy,
    notes: &mut Vec<String>,
) -> Result<(Vec<LevelSolution>, Vec<CycleSummary>), CliError> {
    let mut pipeline = cfg.pipeline;
    if hier.n_levels() == 1 && pipeline != Pipeline::Direct {
        notes.push(format!("single level: {} replaced by a direct solve", pipeline.name()));
        pipeline = Pipeline::Direct;
    }
    let stage = pipeline.name();
    let num = |e| CliError::numerical(stage, e);
    let method = cfg.source_solver();
    match pipeline {
        Pipeline::Direct => {
            if cfg.shift != 0.0 {
                notes.push("direct pipeline returns the lowest eigenpairs; shift only offsets the pencil".into());
            }
            let sets = reference_eigensolve(hier, cfg.shift, cfg.count).map_err(num)?;
            Ok((sets.iter().enumerate().map(|(k, s)| from_set(k, s)).collect(), Vec::new()))
        }
        Pipeline::Tg => {
            let coarse = coarse_eigensolve(&hier.forms[0], cfg.shift, cfg.count).map_err(num)?;
            let mut out = vec![from_set(0, &coarse)];
            for k in 1..hier.n_levels() {
                let fine = &hier.forms[k];
                let mut deflation = Deflation::new();
                let mut values = Vec::with_capacity(coarse.len());
                for i in 0..coarse.len() {
                    let r = two_grid(&coarse, i, &hier.from_coarsest[k], fine, method, &deflation).map_err(num)?;
                    deflation.push(r.vector, &fine.mass).map_err(num)?;
                    values.push(r.value);
                }
                out.push(plain(k, values, deflation.into_vectors(), cfg.shift));
            }
            Ok((out, Vec::new()))
        }
        Pipeline::CascadeTg => {
            let r = cascade_two_grid(hier, cfg.shift, cfg.count, method).map_err(num)?;
            let out = r.levels.into_iter().map(|l| plain(l.level, l.values, l.vectors, cfg.shift)).collect();
            Ok((out, Vec::new()))
        }
        Pipeline::Bmg | Pipeline::Bfmg => {
            let mut state = BmgState::new(hier, bmg_config(cfg)).map_err(num)?;
            let mut out = vec![from_set(0, &state.pairs)];
            let ends: Vec<usize> = if pipeline == Pipeline::Bmg {
                vec![hier.n_levels() - 1]
            } else {
                (1..hier.n_levels()).collect()
            };
            for k in ends {
                let rec = state.vcycle(k).map_err(num)?.clone();
                out.push(LevelSolution {
                    level: k,
                    values: sorted(rec.enriched_values.clone()),
                    tracked: rec.quotients.clone(),
                    vectors: state.basis.clone(),
                    shift: rec.shift_after,
                });
            }
            let cycles = state
                .history
                .iter()
                .map(|c| CycleSummary {
                    level: c.level,
                    dofs: c.dofs,
                    shift_before: c.shift_before,
                    shift_after: c.shift_after,
                    enrichment: c.enrichment.iter().map(|i| i + 1).collect(),
                    dropped: c.dropped.len(),
                })
                .collect();
            Ok((out, cycles))
        }
    }
}

/// Index of the smallest tracked value resolving `exact`.
fn tracked_index(sol: &LevelSolution, exact: f64, rel_tol: f64) -> Option<usize> {
    sol.tracked
        .iter()
        .enumerate()
        .filter(|(_, v)| rel_dist(**v, exact) < rel_tol)
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
}

fn fit(target: f64, samples: Vec<(f64, f64)>, exclude_coarsest: bool) -> RateReport {
    let result = if exclude_coarsest { fit_rate_excluding_coarsest(&samples) } else { fit_rate(&samples) };
    match result {
        Ok(f) => RateReport::from_fit(target, f),
        Err(e) => RateReport::failed(target, samples, e.to_string()),
    }
}

/// Builds the hierarchy and runs the configured pipeline.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport, CliError> {
    cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let t = Instant::now();
    let hier = build_hierarchy(cfg)?;
    let build = t.elapsed().as_secs_f64();
    let mut report = run_on(cfg, &hier)?;
    report.timings.insert(0, Timing { stage: "hierarchy".into(), seconds: build });
    Ok(report)
}

/// Runs the configured pipeline on an existing hierarchy.
pub fn run_on(cfg: &ExperimentConfig, hier: &Hierarchy) -> Result<ExperimentReport, CliError> {
    let mut notes = vec![
        "Gauss-Seidel smoothing is symmetric (forward then backward sweep)".to_string(),
        "enrichment vectors are orthonormalized by modified Gram-Schmidt in the M inner product".to_string(),
    ];
    if matches!(cfg.pipeline, Pipeline::Bmg | Pipeline::Bfmg) {
        notes.push("bootstrap levels track the Rayleigh quotients of the orthonormalized iterates".into());
    }
    let t = Instant::now();
    let (solutions, cycles) = solve(cfg, hier, &mut notes)?;
    let solve_time = t.elapsed().as_secs_f64();

    let levels: Vec<LevelReport> = solutions
        .iter()
        .map(|s| LevelReport {
            level: s.level,
            dofs: hier.dim(s.level),
            h_max: mesh_stats(&hier.meshes[s.level]).h_max,
            values: s.values.clone(),
            tracked: s.tracked.clone(),
            shift: s.shift,
        })
        .collect();

    let finest = solutions.last().expect("at least one level");
    let spectrum = ExactSpectrum::covering(finest.values.len());
    let clusters = ClusterSummary::from(&match_spectrum(&finest.values, &spectrum, cfg.rel_tol));

    let mut rates = Vec::with_capacity(cfg.targets.len());
    for &target in &cfg.targets {
        let mut samples = Vec::new();
        let mut missing = Vec::new();
        for s in &solutions {
            match tracked_error(&s.tracked, target, cfg.rel_tol) {
                Some(e) => samples.push((hier.dim(s.level) as f64, e)),
                None => missing.push(s.level),
            }
        }
        let mut r = fit(target, samples, cfg.exclude_coarsest);
        if !missing.is_empty() {
            r.notes.push(format!("target not resolved on levels {missing:?}"));
        }
        rates.push(r);
    }

    let t = Instant::now();
    let mut estimator = Vec::new();
    let mut estimator_rates = Vec::new();
    if cfg.estimator {
        for &target in &cfg.targets {
            let mut samples = Vec::new();
            for s in &solutions {
                let Some(i) = tracked_index(s, target, cfg.rel_tol) else { continue };
                let value = s.tracked[i];
                let b = estimate(&hier.meshes[s.level], &s.vectors[i], value.max(0.0))
                    .map_err(|e| CliError::Numerical { stage: "estimator".into(), msg: e.to_string() })?;
                samples.push((hier.dim(s.level) as f64, b.global));
                estimator.push(EstimatorRecord { level: s.level, dofs: hier.dim(s.level), target, value, eta: b.global });
            }
            estimator_rates.push(fit(target, samples, false));
        }
    }
    let estimator_time = t.elapsed().as_secs_f64();

    Ok(ExperimentReport {
        format_version: FORMAT_VERSION,
        config: cfg.clone(),
        notes,
        levels,
        clusters,
        rates,
        estimator,
        estimator_rates,
        cycles,
        timings: vec![
            Timing { stage: "solve".into(), seconds: solve_time },
            Timing { stage: "estimator".into(), seconds: estimator_time },
        ],
    })
}
