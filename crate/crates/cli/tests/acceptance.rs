//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits nonzero only when a criterion outside `KNOWN_SHORTFALLS`
//! fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;
use surfeig::assembly::{assemble, cotangent_stiffness};
use surfeig::eigensolver::{coarse_eigensolve, Hierarchy};
use surfeig::estimator::estimate;
use surfeig::linalg::{b_orthonormalize, dot};
use surfeig::mesh::{make_octahedron, mesh_stats, refine_hierarchy, refined_coarse, UnitSphere};
use surfeig::transfer::prolong;
use surfeig::validation::{fit_rate, match_spectrum, rel_dist, ExactSpectrum};
use surfeig_cli::config::{ExperimentConfig, Pipeline};
use surfeig_cli::pipeline::run_experiment;
use surfeig_cli::report::ExperimentReport;

/// Sub-claims that do not hold on our meshes; see the README.
const KNOWN_SHORTFALLS: &[&str] = &["6a"];

struct Outcome {
    id: &'static str,
    pass: bool,
    detail: String,
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn config(name: &str) -> ExperimentConfig {
    ExperimentConfig::load(&configs().join(format!("{name}.toml"))).expect(name)
}

fn run(name: &str) -> ExperimentReport {
    run_experiment(&config(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn rate(r: &ExperimentReport, target: f64) -> f64 {
    r.rate(target).unwrap_or(f64::NAN)
}

fn criterion_1() -> Vec<Outcome> {
    let t = Instant::now();
    let mut worst = 0.0f64;
    for mesh in refine_hierarchy(make_octahedron(), 3, &UnitSphere).unwrap() {
        let a = assemble(&mesh).unwrap().stiffness;
        let c = cotangent_stiffness(&mesh).unwrap();
        let diff = a.add_scaled(&c, -1.0).unwrap();
        let max_abs = diff.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let scale = a.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        worst = worst.max(max_abs / scale);
    }
    let secs = t.elapsed().as_secs_f64();
    vec![Outcome {
        id: "1",
        pass: worst <= 1e-12 && secs <= 1.0,
        detail: format!("cotangent equivalence, levels 0-3: max rel diff {worst:.2e} in {secs:.2}s"),
    }]
}

fn criterion_2() -> Vec<Outcome> {
    let t = Instant::now();
    let mesh = refined_coarse(&make_octahedron(), 4, &UnitSphere).unwrap();
    let forms = assemble(&mesh).unwrap();
    let set = coarse_eigensolve(&forms, 0.0, 36).unwrap();
    let report = match_spectrum(&set.values, &ExactSpectrum::covering(36), 0.1);
    let secs = t.elapsed().as_secs_f64();
    let mut ok = secs < 30.0;
    let mut found = Vec::new();
    for (exact, mult) in [(0.0, 1), (2.0, 3), (6.0, 5), (12.0, 7), (20.0, 9), (30.0, 11)] {
        let n = report.get(exact).map_or(0, |c| c.count());
        ok &= n == mult;
        found.push(format!("{exact}:{n}/{mult}"));
    }
    ok &= report.unmatched.is_empty();
    vec![Outcome {
        id: "2",
        pass: ok,
        detail: format!("dense solve at {} DoF: {} in {secs:.1}s", forms.dim(), found.join(" ")),
    }]
}

fn criterion_3() -> Vec<Outcome> {
    let r = run("direct_rates");
    let (r2, r6) = (rate(&r, 2.0), rate(&r, 6.0));
    let used = r.rates.iter().map(|x| x.samples.len()).min().unwrap_or(0);
    vec![Outcome {
        id: "3",
        pass: (0.9..=1.1).contains(&r2) && (0.9..=1.1).contains(&r6) && used >= 4,
        detail: format!("direct rates over {used} levels: r(2) = {r2:.4}, r(6) = {r6:.4}"),
    }]
}

fn criterion_4() -> Vec<Outcome> {
    let t = Instant::now();
    let rows: [(&str, Option<[f64; 3]>, f64); 4] = [
        ("table1_tg", Some([1.0084, 1.0063, 1.0084]), 0.0),
        ("table1_tg_kaczmarz", None, 0.90),
        ("table1_bmg", Some([1.0037, 1.0005, 1.0059]), 0.0),
        ("table1_bmg_gs", None, 0.95),
    ];
    let mut out = Vec::new();
    let mut all = true;
    let mut lines = Vec::new();
    for (name, reference, floor) in rows {
        let r = run(name);
        let got: Vec<f64> = [2.0, 6.0, 12.0].iter().map(|&l| rate(&r, l)).collect();
        let ok = match reference {
            Some(want) => got.iter().zip(want).all(|(g, w)| (g - w).abs() <= 0.1),
            None => got.iter().all(|g| *g >= floor),
        };
        all &= ok;
        lines.push(format!("{name} [{:.4} {:.4} {:.4}]{}", got[0], got[1], got[2], if ok { "" } else { " (off)" }));
    }
    let secs = t.elapsed().as_secs_f64();
    out.push(Outcome {
        id: "4",
        pass: all && secs < 600.0,
        detail: format!("rate table, lambda 2/6/12: {} in {secs:.0}s", lines.join("; ")),
    });
    out
}

fn criterion_5() -> Vec<Outcome> {
    let direct = rate(&run("table2_bmg"), 20.0);
    let kacz = rate(&run("table2_bmg_kaczmarz"), 20.0);
    vec![Outcome {
        id: "5",
        pass: (direct - 0.9861).abs() <= 0.1 && kacz >= 0.85,
        detail: format!("shifted bootstrap at lambda 20: direct {direct:.4}, Kaczmarz(5) {kacz:.4}"),
    }]
}

fn criterion_6() -> Vec<Outcome> {
    let cascade = run("loss_cascade_tg");
    let window = run("loss_bmg_window20");
    let largest = run("loss_bmg_largest17");
    let mut plain_cfg = config("loss_cascade_tg");
    plain_cfg.pipeline = Pipeline::Tg;
    plain_cfg.name = "loss_tg".into();
    let plain = run_experiment(&plain_cfg).unwrap();
    let c = &cascade.clusters;
    let p = &plain.clusters;
    vec![
        Outcome {
            id: "6a",
            pass: c.loss(30.0),
            detail: format!(
                "cascading two-grid flags lambda 30: matched {}/11 (plain two-grid: {}/11)",
                c.matched(30.0),
                p.matched(30.0)
            ),
        },
        Outcome {
            id: "6b",
            pass: c.loss(42.0),
            detail: format!(
                "cascading two-grid flags lambda 42: matched {}/13 (plain two-grid: {}/13)",
                c.matched(42.0),
                p.matched(42.0)
            ),
        },
        Outcome {
            id: "6c",
            pass: !window.clusters.loss(30.0) && window.clusters.matched(30.0) == 11,
            detail: format!("bootstrap, window of 20, clears lambda 30: matched {}/11", window.clusters.matched(30.0)),
        },
        Outcome {
            id: "6d",
            pass: largest.clusters.matched(42.0) == 13,
            detail: format!(
                "bootstrap, largest-17 policy, recovers lambda 42: matched {}/13",
                largest.clusters.matched(42.0)
            ),
        },
    ]
}

fn criterion_7() -> Vec<Outcome> {
    let value_37 = |r: &ExperimentReport| -> Vec<f64> { r.levels.iter().map(|l| l.values[36]).collect() };
    let single = value_37(&run("stagnation_single"));
    let window = value_37(&run("stagnation_window"));
    let last = |v: &[f64]| rel_dist(*v.last().unwrap(), 42.0);
    let stuck = last(&single) > 0.1;
    let moved = last(&window) <= 0.1;
    vec![Outcome {
        id: "7",
        pass: stuck && moved,
        detail: format!(
            "37th value, single enrichment {:?} (rel {:.3}); window 26..37 {:?} (rel {:.3})",
            single.iter().map(|v| format!("{v:.2}")).collect::<Vec<_>>(),
            last(&single),
            window.iter().map(|v| format!("{v:.2}")).collect::<Vec<_>>(),
            last(&window)
        ),
    }]
}

fn criterion_8() -> Vec<Outcome> {
    let hier = Hierarchy::build(refined_coarse(&make_octahedron(), 2, &UnitSphere).unwrap(), 3, &UnitSphere).unwrap();
    let mut failures = Vec::new();
    for p in &hier.prolongations {
        let ones = prolong(p, &vec![1.0; p.n_coarse()]).unwrap();
        if ones.iter().any(|x| (x - 1.0).abs() > 1e-14) {
            failures.push("prolongation constants");
        }
    }
    for (mesh, forms) in hier.meshes.iter().zip(&hier.forms).take(2) {
        let ones = vec![1.0; forms.dim()];
        if (forms.mass.bilinear(&ones, &ones) - mesh_stats(mesh).total_area).abs() > 1e-12 {
            failures.push("mass area");
        }
        if forms.stiffness.spmv(&ones).unwrap().iter().any(|x| x.abs() > 1e-12) {
            failures.push("stiffness kernel");
        }
    }
    let forms = &hier.forms[0];
    let set = coarse_eigensolve(forms, 0.0, 9).unwrap();
    let (lam, u) = (set.values[5], &set.vectors[5]);
    let w: Vec<f64> = u.iter().enumerate().map(|(i, x)| x + 0.2 * (i as f64 * 1.7).sin()).collect();
    let d: Vec<f64> = w.iter().zip(u).map(|(a, b)| a - b).collect();
    let (a, m) = (&forms.stiffness, &forms.mass);
    let wmw = m.bilinear(&w, &w);
    let lhs = a.bilinear(&w, &w) / wmw - lam;
    let rhs = (a.bilinear(&d, &d) - lam * m.bilinear(&d, &d)) / wmw;
    if (lhs - rhs).abs() > 1e-10 * (a.bilinear(&w, &w) / wmw) {
        failures.push("quotient error identity");
    }
    let q = b_orthonormalize(&set.vectors, m).unwrap();
    for i in 0..q.vectors.len() {
        let mi = m.spmv(&q.vectors[i]).unwrap();
        for j in 0..q.vectors.len() {
            if (dot(&mi, &q.vectors[j]) - if i == j { 1.0 } else { 0.0 }).abs() > 1e-12 {
                failures.push("M-orthonormality");
            }
        }
    }
    let shifted = coarse_eigensolve(forms, 11.5, 1).unwrap();
    if (forms.mass.bilinear(&set.vectors[0], &shifted.vectors[0]).abs() - 1.0).abs() > 1e-10 {
        failures.push("shift invariance");
    }
    let eta = |c: f64| {
        let v: Vec<f64> = u.iter().map(|x| c * x).collect();
        estimate(&hier.meshes[0], &v, lam).unwrap().global
    };
    if (eta(-3.0) - 3.0 * eta(1.0)).abs() > 1e-12 * eta(1.0) {
        failures.push("estimator homogeneity");
    }
    let samples: Vec<(f64, f64)> = hier
        .meshes
        .iter()
        .zip(&hier.forms)
        .map(|(mesh, f)| {
            let s = coarse_eigensolve(f, 0.0, 2).unwrap();
            (f.dim() as f64, estimate(mesh, &s.vectors[1], s.values[1]).unwrap().global)
        })
        .collect();
    let exponent = -fit_rate(&samples).unwrap().rate;
    if !(-0.65..=-0.35).contains(&exponent) {
        failures.push("estimator decay");
    }
    failures.dedup();
    vec![Outcome {
        id: "8",
        pass: failures.is_empty(),
        detail: format!(
            "invariants spot check ({}), estimator exponent {exponent:.3}; full suites: cargo test -p surfeig",
            if failures.is_empty() { "all hold".to_string() } else { failures.join(", ") }
        ),
    }]
}

fn solve_single_thread(config: &Path, out: &Path) {
    let status = Command::new(env!("CARGO_BIN_EXE_surfeig"))
        .args(["--threads", "1", "solve", "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .expect("spawn surfeig");
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn criterion_9() -> Vec<Outcome> {
    let tmp = tempfile::tempdir().unwrap();
    let mut checked = Vec::new();
    let mut ok = true;
    for name in ["table1_bmg_gs", "loss_cascade_tg", "stagnation_window"] {
        let cfg = configs().join(format!("{name}.toml"));
        let (a, b) = (tmp.path().join(format!("{name}_a")), tmp.path().join(format!("{name}_b")));
        solve_single_thread(&cfg, &a);
        solve_single_thread(&cfg, &b);
        let (fa, fb) = (csv_files(&a), csv_files(&b));
        ok &= !fa.is_empty() && fa == fb;
        checked.push(format!("{name} ({} files)", fa.len()));
    }
    vec![Outcome { id: "9", pass: ok, detail: format!("--threads 1 reruns byte-identical: {}", checked.join(", ")) }]
}

fn main() {
    let criteria: [fn() -> Vec<Outcome>; 9] = [
        criterion_1,
        criterion_2,
        criterion_3,
        criterion_4,
        criterion_5,
        criterion_6,
        criterion_7,
        criterion_8,
        criterion_9,
    ];
    let mut unexpected = Vec::new();
    for c in criteria {
        for o in c() {
            let known = KNOWN_SHORTFALLS.contains(&o.id);
            let tag = match (o.pass, known) {
                (true, _) => "PASS",
                (false, true) => "FAIL (known)",
                (false, false) => "FAIL",
            };
            println!("criterion {:<3} {tag:<12} {}", o.id, o.detail);
            if !o.pass && !known {
                unexpected.push(o.id);
            }
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
