//! CSV, JSON and SVG artifacts of a report.
//!
//! CSV files carry no timings so runs with different thread counts can be
//! compared byte for byte.

use crate::report::ExperimentReport;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;
use surfeig::validation::{rel_dist, ExactSpectrum};

fn num(x: f64) -> String {
    format!("{x:.15e}")
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, num)
}

pub fn eigenvalues_csv(report: &ExperimentReport, level: usize) -> String {
    let l = &report.levels[level];
    let spectrum = ExactSpectrum::covering(l.values.len());
    let mut s = String::from("index,value,exact,rel_err\n");
    for (i, v) in l.values.iter().enumerate() {
        let exact = spectrum.value_at(i + 1);
        let _ = writeln!(s, "{},{},{},{}", i + 1, num(*v), opt(exact), opt(exact.map(|e| rel_dist(*v, e))));
    }
    s
}

pub fn rates_csv(report: &ExperimentReport) -> String {
    let mut s = String::from("target,rate,residual,samples\n");
    for r in &report.rates {
        let _ = writeln!(s, "{},{},{},{}", num(r.target), opt(r.rate), opt(r.residual), r.samples.len());
    }
    s
}

pub fn errors_csv(report: &ExperimentReport) -> String {
    let mut s = String::from("target,level,dofs,error,used\n");
    for r in &report.rates {
        let mut rows: Vec<(f64, f64, bool)> = r.samples.iter().map(|&(d, e)| (d, e, true)).collect();
        rows.extend(r.excluded.iter().map(|&(d, e)| (d, e, false)));
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (d, e, used) in rows {
            let level = report.levels.iter().find(|l| l.dofs as f64 == d).map_or(0, |l| l.level);
            let _ = writeln!(s, "{},{},{},{},{}", num(r.target), level, d as usize, num(e), used);
        }
    }
    s
}

pub fn estimator_csv(report: &ExperimentReport) -> String {
    let mut s = String::from("target,level,dofs,value,eta\n");
    for e in &report.estimator {
        let _ = writeln!(s, "{},{},{},{},{}", num(e.target), e.level, e.dofs, num(e.value), num(e.eta));
    }
    s
}

pub fn clusters_csv(report: &ExperimentReport) -> String {
    let mut s = String::from("l,exact,multiplicity,matched,mean_rel_err,max_rel_err,covered,loss\n");
    for c in &report.clusters.clusters {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            c.l,
            num(c.exact),
            c.multiplicity,
            c.matched,
            num(c.mean_rel_err),
            num(c.max_rel_err),
            c.covered,
            c.loss
        );
    }
    s
}

/// Every level's values in one long table.
pub fn spectrum_csv(report: &ExperimentReport) -> String {
    let mut s = String::from("level,dofs,index,value\n");
    for l in &report.levels {
        for (i, v) in l.values.iter().enumerate() {
            let _ = writeln!(s, "{},{},{},{}", l.level, l.dofs, i + 1, num(*v));
        }
    }
    s
}

pub fn shifts_csv(report: &ExperimentReport) -> String {
    let mut s = String::from("level,dofs,shift_before,shift_after,enrichment,dropped\n");
    for c in &report.cycles {
        let idx: Vec<String> = c.enrichment.iter().map(|i| i.to_string()).collect();
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            c.level,
            c.dofs,
            num(c.shift_before),
            num(c.shift_after),
            idx.join(" "),
            c.dropped
        );
    }
    s
}

/// Writes every artifact into `dir`.
pub fn write_all(report: &ExperimentReport, dir: &Path) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("report.json"), report.to_json())?;
    fs::write(dir.join("config.toml"), report.config.to_toml())?;
    for l in 0..report.levels.len() {
        fs::write(dir.join(format!("eigenvalues_level{}.csv", report.levels[l].level)), eigenvalues_csv(report, l))?;
    }
    fs::write(dir.join("rates.csv"), rates_csv(report))?;
    fs::write(dir.join("errors.csv"), errors_csv(report))?;
    fs::write(dir.join("estimator.csv"), estimator_csv(report))?;
    fs::write(dir.join("clusters.csv"), clusters_csv(report))?;
    fs::write(dir.join("spectrum.csv"), spectrum_csv(report))?;
    fs::write(dir.join("shifts.csv"), shifts_csv(report))?;
    fs::write(dir.join("spectrum.svg"), crate::svg::spectrum(report))?;
    fs::write(dir.join("convergence.svg"), crate::svg::convergence(report))?;
    Ok(())
}
