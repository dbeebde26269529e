//! Minimal SVG plots.

use crate::report::ExperimentReport;
use std::fmt::Write as _;
use surfeig::validation::ExactSpectrum;

const W: f64 = 640.0;
const H: f64 = 420.0;
const PAD: f64 = 56.0;
const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"];

/// Maps data ranges onto the plot area.
#[derive(Debug, Clone, Copy)]
pub struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        let widen = |a: f64, b: f64| if b > a { (a, b) } else { (a - 0.5, a + 0.5) };
        let (x0, x1) = widen(x0, x1);
        let (y0, y1) = widen(y0, y1);
        Frame { x0, x1, y0, y1 }
    }

    pub fn x(&self, v: f64) -> f64 {
        PAD + (v - self.x0) / (self.x1 - self.x0) * (W - 2.0 * PAD)
    }

    pub fn y(&self, v: f64) -> f64 {
        H - PAD - (v - self.y0) / (self.y1 - self.y0) * (H - 2.0 * PAD)
    }
}

fn open(title: &str, xlabel: &str, ylabel: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * PAD,
        H - 2.0 * PAD
    );
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 12.0, escape(xlabel));
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(ylabel)
    );
    s
}

fn ticks(s: &mut String, f: &Frame, xs: &[(f64, String)], ys: &[(f64, String)]) {
    for (v, label) in xs {
        let _ = writeln!(s, r#"<text x="{:.2}" y="{}" text-anchor="middle">{label}</text>"#, f.x(*v), H - PAD + 16.0);
    }
    for (v, label) in ys {
        let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{label}</text>"#, PAD - 4.0, f.y(*v) + 4.0);
    }
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn legend(s: &mut String, i: usize, label: &str) {
    let y = PAD + 14.0 + 16.0 * i as f64;
    let c = COLORS[i % COLORS.len()];
    let _ = writeln!(s, r#"<rect x="{}" y="{}" width="10" height="10" fill="{c}"/>"#, W - PAD - 120.0, y - 9.0);
    let _ = writeln!(s, r#"<text x="{}" y="{y}">{}</text>"#, W - PAD - 104.0, escape(label));
}

fn decade_ticks(lo: f64, hi: f64) -> Vec<(f64, String)> {
    (lo.floor() as i32..=hi.ceil() as i32)
        .filter(|e| (*e as f64) >= lo - 1e-9 && (*e as f64) <= hi + 1e-9)
        .map(|e| (e as f64, format!("1e{e}")))
        .collect()
}

/// Eigenvalue index against value for every level, with the exact
/// staircase in grey.
pub fn spectrum(report: &ExperimentReport) -> String {
    let n = report.levels.iter().map(|l| l.values.len()).max().unwrap_or(0);
    let exact = ExactSpectrum::covering(n);
    let ex: Vec<f64> = (1..=n).filter_map(|j| exact.value_at(j)).collect();
    let ymax = report
        .levels
        .iter()
        .flat_map(|l| l.values.iter().copied())
        .chain(ex.iter().copied())
        .fold(1.0, f64::max);
    let f = Frame::new(0.0, n as f64 + 1.0, 0.0, ymax * 1.05);
    let mut s = open(&format!("{}: spectrum", report.config.name), "index", "eigenvalue");
    let step = (n / 8).max(1);
    let xs: Vec<(f64, String)> = (1..=n).step_by(step).map(|j| (j as f64, j.to_string())).collect();
    let ys: Vec<(f64, String)> = (0..=4).map(|k| ymax * k as f64 / 4.0).map(|v| (v, format!("{v:.0}"))).collect();
    ticks(&mut s, &f, &xs, &ys);
    let mut path = String::new();
    for (j, v) in ex.iter().enumerate() {
        let _ = write!(path, "{}{:.2},{:.2} ", if j == 0 { "M" } else { "L" }, f.x(j as f64 + 1.0), f.y(*v));
    }
    let _ = writeln!(s, r##"<path d="{path}" fill="none" stroke="#bbbbbb" stroke-width="2"/>"##);
    for (li, l) in report.levels.iter().enumerate() {
        let c = COLORS[li % COLORS.len()];
        for (j, v) in l.values.iter().enumerate() {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{c}"/>"#, f.x(j as f64 + 1.0), f.y(*v));
        }
        legend(&mut s, li, &format!("level {} ({})", l.level, l.dofs));
    }
    s.push_str("</svg>\n");
    s
}

/// Log-log error against DoF per target, with the fitted lines.
pub fn convergence(report: &ExperimentReport) -> String {
    let pts: Vec<(f64, f64)> = report
        .rates
        .iter()
        .flat_map(|r| r.samples.iter().chain(&r.excluded))
        .filter(|p| p.0 > 0.0 && p.1 > 0.0)
        .map(|&(d, e)| (d.log10(), e.log10()))
        .collect();
    let (x0, x1) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, p| (a.0.min(p.0), a.1.max(p.0)));
    let (y0, y1) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, p| (a.0.min(p.1), a.1.max(p.1)));
    let f = if pts.is_empty() { Frame::new(0.0, 1.0, 0.0, 1.0) } else { Frame::new(x0 - 0.1, x1 + 0.1, y0 - 0.2, y1 + 0.2) };
    let mut s = open(&format!("{}: convergence", report.config.name), "DoF", "|λ_h - λ|");
    if !pts.is_empty() {
        ticks(&mut s, &f, &decade_ticks(x0 - 0.1, x1 + 0.1), &decade_ticks(y0 - 0.2, y1 + 0.2));
    }
    for (i, r) in report.rates.iter().enumerate() {
        let c = COLORS[i % COLORS.len()];
        let used: Vec<(f64, f64)> =
            r.samples.iter().filter(|p| p.0 > 0.0 && p.1 > 0.0).map(|&(d, e)| (d.log10(), e.log10())).collect();
        for &(x, y) in &used {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="{c}"/>"#, f.x(x), f.y(y));
        }
        for &(d, e) in r.excluded.iter().filter(|p| p.0 > 0.0 && p.1 > 0.0) {
            let (x, y) = (d.log10(), e.log10());
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="none" stroke="{c}"/>"#, f.x(x), f.y(y));
        }
        if let (Some(rate), Some(first), Some(last)) = (r.rate, used.first(), used.last()) {
            let mean_x = used.iter().map(|p| p.0).sum::<f64>() / used.len() as f64;
            let mean_y = used.iter().map(|p| p.1).sum::<f64>() / used.len() as f64;
            let line = |x: f64| mean_y - rate * (x - mean_x);
            let _ = writeln!(
                s,
                r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{c}" stroke-dasharray="4 3"/>"#,
                f.x(first.0),
                f.y(line(first.0)),
                f.x(last.0),
                f.y(line(last.0))
            );
        }
        let label = match r.rate {
            Some(rate) => format!("λ={} r={rate:.3}", r.target),
            None => format!("λ={} r=n/a", r.target),
        };
        legend(&mut s, i, &label);
    }
    s.push_str("</svg>\n");
    s
}

/// Rates of several reports side by side, one group per target.
pub fn comparison(reports: &[ExperimentReport]) -> String {
    let mut targets: Vec<f64> = reports.iter().flat_map(|r| r.rates.iter().map(|x| x.target)).collect();
    targets.sort_by(f64::total_cmp);
    targets.dedup();
    let rmax = reports
        .iter()
        .flat_map(|r| r.rates.iter().filter_map(|x| x.rate))
        .fold(1.0, f64::max);
    let groups = targets.len().max(1) as f64;
    let f = Frame::new(0.0, groups, 0.0, rmax * 1.1);
    let mut s = open("convergence rates", "target eigenvalue", "rate");
    let xs: Vec<(f64, String)> = targets.iter().enumerate().map(|(i, t)| (i as f64 + 0.5, format!("{t}"))).collect();
    let ys: Vec<(f64, String)> = (0..=4).map(|k| rmax * 1.1 * k as f64 / 4.0).map(|v| (v, format!("{v:.2}"))).collect();
    ticks(&mut s, &f, &xs, &ys);
    let width = 0.8 / reports.len().max(1) as f64;
    for (ri, r) in reports.iter().enumerate() {
        let c = COLORS[ri % COLORS.len()];
        for (ti, t) in targets.iter().enumerate() {
            let Some(rate) = r.rate(*t) else { continue };
            let x = ti as f64 + 0.1 + width * ri as f64;
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{c}"/>"#,
                f.x(x),
                f.y(rate),
                f.x(x + width) - f.x(x),
                f.y(0.0) - f.y(rate)
            );
        }
        legend(&mut s, ri, &r.config.name);
    }
    s.push_str("</svg>\n");
    s
}
