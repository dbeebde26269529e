//! Command-line front end: configured experiments, artifacts and report
//! comparison.

pub mod config;
pub mod output;
pub mod pipeline;
pub mod report;
pub mod svg;

use config::ExperimentConfig;
use report::ExperimentReport;
use std::fmt::Write as _;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use surfeig::eigensolver::SolverError;
use surfeig::linalg::write_matrix_market;
use surfeig::mesh::mesh_stats;
use surfeig::mesh::save_off;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure in {stage}: {msg}")]
    Numerical { stage: String, msg: String },
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn numerical(stage: &str, e: SolverError) -> Self {
        CliError::Numerical { stage: stage.to_string(), msg: e.to_string() }
    }

    fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
        move |source| CliError::Io { path: path.to_path_buf(), source }
    }

    /// Process exit code: 2 for configuration, 3 for numerical and 4 for
    /// i/o errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical { .. } => 3,
            CliError::Io { .. } => 4,
        }
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    ExperimentConfig::load(path).map_err(|e| match e {
        config::ConfigError::Read { path, source } => CliError::Io { path, source },
        other => CliError::Config(other.to_string()),
    })
}

/// Writes the hierarchy meshes as OFF files plus `mesh_stats.csv`.
pub fn cmd_mesh(cfg: &ExperimentConfig, out: &Path) -> Result<(), CliError> {
    cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let hier = pipeline::build_hierarchy(cfg)?;
    fs::create_dir_all(out).map_err(CliError::io(out))?;
    let mut csv = String::from("level,vertices,triangles,h_max,h_min,total_area,min_quality\n");
    for (k, mesh) in hier.meshes.iter().enumerate() {
        let path = out.join(format!("level{k}.off"));
        save_off(mesh, &path).map_err(|e| CliError::Io {
            path: path.clone(),
            source: std::io::Error::other(e.to_string()),
        })?;
        let s = mesh_stats(mesh);
        let _ = writeln!(
            csv,
            "{k},{},{},{:.15e},{:.15e},{:.15e},{:.15e}",
            s.n_vertices, s.n_triangles, s.h_max, s.h_min, s.total_area, s.min_quality
        );
    }
    let path = out.join("mesh_stats.csv");
    fs::write(&path, csv).map_err(CliError::io(&path))
}

fn dump_matrices(hier: &surfeig::eigensolver::Hierarchy, out: &Path) -> Result<(), CliError> {
    let write = |name: String, a: &surfeig::linalg::SparseMatrix| -> Result<(), CliError> {
        let path = out.join(name);
        let f = fs::File::create(&path).map_err(CliError::io(&path))?;
        write_matrix_market(a, BufWriter::new(f))
            .map_err(|e| CliError::Io { path: path.clone(), source: std::io::Error::other(e.to_string()) })
    };
    for (k, forms) in hier.forms.iter().enumerate() {
        write(format!("stiffness_level{k}.mtx"), &forms.stiffness)?;
        write(format!("mass_level{k}.mtx"), &forms.mass)?;
    }
    for (k, p) in hier.prolongations.iter().enumerate() {
        write(format!("prolongation_level{k}.mtx"), &p.matrix)?;
    }
    Ok(())
}

/// Runs an experiment and writes all artifacts into `out`.
pub fn cmd_solve(cfg: &ExperimentConfig, out: &Path, dump: bool) -> Result<ExperimentReport, CliError> {
    cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let t = std::time::Instant::now();
    let hier = pipeline::build_hierarchy(cfg)?;
    let build = t.elapsed().as_secs_f64();
    let mut report = pipeline::run_on(cfg, &hier)?;
    report.timings.insert(0, report::Timing { stage: "hierarchy".into(), seconds: build });
    output::write_all(&report, out).map_err(CliError::io(out))?;
    if dump {
        dump_matrices(&hier, out)?;
    }
    Ok(report)
}

/// Rates with one row per target eigenvalue and one column per report.
pub fn comparison_table(reports: &[ExperimentReport]) -> String {
    let mut targets: Vec<f64> = reports.iter().flat_map(|r| r.rates.iter().map(|x| x.target)).collect();
    targets.sort_by(f64::total_cmp);
    targets.dedup();
    let mut csv = String::from("lambda");
    for r in reports {
        csv.push(',');
        csv.push_str(&r.config.name);
    }
    csv.push('\n');
    for t in targets {
        csv.push_str(&t.to_string());
        for r in reports {
            csv.push(',');
            if let Some(x) = r.rate(t) {
                csv.push_str(&format!("{x:.4}"));
            }
        }
        csv.push('\n');
    }
    csv
}

/// Merges several `report.json` files into `comparison.csv` (rates by
/// target and run), `comparison_long.csv` and `comparison.svg`.
pub fn cmd_report(inputs: &[PathBuf], out: &Path) -> Result<Vec<ExperimentReport>, CliError> {
    if inputs.is_empty() {
        return Err(CliError::Config("no reports given".into()));
    }
    let mut reports = Vec::with_capacity(inputs.len());
    for p in inputs {
        let path = if p.is_dir() { p.join("report.json") } else { p.clone() };
        let text = fs::read_to_string(&path).map_err(CliError::io(&path))?;
        let r = ExperimentReport::from_json(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        reports.push(r);
    }
    fs::create_dir_all(out).map_err(CliError::io(out))?;
    let path = out.join("comparison.csv");
    fs::write(&path, comparison_table(&reports)).map_err(CliError::io(&path))?;
    let mut csv = String::from("name,pipeline,smoother,target,rate,finest_dofs,finest_error\n");
    for r in &reports {
        for rate in &r.rates {
            let finest = r.finest();
            let err = surfeig::validation::tracked_error(&finest.tracked, rate.target, r.config.rel_tol);
            let _ = writeln!(
                csv,
                "{},{},{:?},{},{},{},{}",
                r.config.name,
                r.config.pipeline.name(),
                r.config.source_solver(),
                rate.target,
                rate.rate.map_or_else(String::new, |x| format!("{x:.6}")),
                finest.dofs,
                err.map_or_else(String::new, |x| format!("{x:.6e}"))
            );
        }
    }
    let path = out.join("comparison_long.csv");
    fs::write(&path, csv).map_err(CliError::io(&path))?;
    let path = out.join("comparison.svg");
    fs::write(&path, svg::comparison(&reports)).map_err(CliError::io(&path))?;
    Ok(reports)
}
