//! Static SVG panels: bias, RMSE and boxplots per coordinate group.
//!
//! Coordinates are split into a `signal` group (true value nonzero) and a
//! `null` group. Layout depends only on the report, so identical reports
//! give identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::study::StudyReport;
use crate::error::{Error, Result};

const PALETTE: [&str; 8] = ["#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666"];
const LEFT: f64 = 70.0;
const TOP: f64 = 40.0;
const PLOT_H: f64 = 260.0;
const BOTTOM: f64 = 60.0;

struct Frame {
    width: f64,
    lo: f64,
    hi: f64,
}

impl Frame {
    fn y(&self, v: f64) -> f64 {
        TOP + PLOT_H * (self.hi - v) / (self.hi - self.lo)
    }
}

fn nice_range(values: impl Iterator<Item = f64>, include_zero: bool) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values.filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if include_zero {
        lo = lo.min(0.0);
        hi = hi.max(0.0);
    }
    if !lo.is_finite() {
        return (-1.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 1.0, hi + 1.0);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn header(svg: &mut String, width: f64, title: &str) {
    let height = TOP + PLOT_H + BOTTOM;
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{:.1}" y="20" text-anchor="middle" font-size="14">{}</text>"#, width / 2.0, escape(title));
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn axes(svg: &mut String, f: &Frame) {
    let right = f.width - 150.0;
    let _ = writeln!(svg, r#"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{:.1}" stroke="black"/>"#, TOP + PLOT_H);
    for k in 0..=4 {
        let v = f.lo + (f.hi - f.lo) * k as f64 / 4.0;
        let y = f.y(v);
        let _ = writeln!(svg, r#"<line x1="{:.1}" y1="{y:.1}" x2="{LEFT}" y2="{y:.1}" stroke="black"/>"#, LEFT - 4.0);
        let _ = writeln!(svg, r##"<line x1="{LEFT}" y1="{y:.1}" x2="{right:.1}" y2="{y:.1}" stroke="#dddddd"/>"##);
        let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{v:.3}</text>"#, LEFT - 6.0, y + 4.0);
    }
    if f.lo < 0.0 && f.hi > 0.0 {
        let y = f.y(0.0);
        let _ = writeln!(svg, r#"<line x1="{LEFT}" y1="{y:.1}" x2="{right:.1}" y2="{y:.1}" stroke="black"/>"#);
    }
}

fn legend(svg: &mut String, width: f64, names: &[&str]) {
    let x = width - 140.0;
    for (i, name) in names.iter().enumerate() {
        let y = TOP + 10.0 + 18.0 * i as f64;
        let _ = writeln!(svg, r#"<rect x="{x:.1}" y="{:.1}" width="12" height="12" fill="{}"/>"#, y - 10.0, PALETTE[i % PALETTE.len()]);
        let _ = writeln!(svg, r#"<text x="{:.1}" y="{y:.1}">{}</text>"#, x + 18.0, escape(name));
    }
}

fn slot_width(estimators: usize) -> f64 {
    (16.0 * estimators as f64 + 20.0).max(48.0)
}

/// Grouped bars: one group per coordinate, one bar per estimator.
fn bar_panel(title: &str, coords: &[usize], names: &[&str], values: &[Vec<f64>]) -> String {
    let slot = slot_width(names.len());
    let width = LEFT + slot * coords.len() as f64 + 160.0;
    let (lo, hi) = nice_range(values.iter().flatten().cloned(), true);
    let f = Frame { width, lo, hi };
    let mut svg = String::new();
    header(&mut svg, width, title);
    axes(&mut svg, &f);
    for (ci, &c) in coords.iter().enumerate() {
        let x0 = LEFT + slot * ci as f64 + 10.0;
        for (ei, series) in values.iter().enumerate() {
            let v = series[ci];
            let (ya, yb) = (f.y(v.max(0.0)), f.y(v.min(0.0)));
            let _ = writeln!(
                svg,
                r#"<rect x="{:.1}" y="{ya:.1}" width="14" height="{:.1}" fill="{}"/>"#,
                x0 + 16.0 * ei as f64,
                (yb - ya).max(0.5),
                PALETTE[ei % PALETTE.len()]
            );
        }
        let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, x0 + slot / 2.0 - 10.0, TOP + PLOT_H + 18.0, c + 1);
    }
    legend(&mut svg, width, names);
    svg.push_str("</svg>\n");
    svg
}

/// Type-7 quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let i = h.floor() as usize;
    let frac = h - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] + frac * (sorted[i + 1] - sorted[i])
    } else {
        sorted[i]
    }
}

fn box_panel(title: &str, coords: &[usize], names: &[&str], samples: &[Vec<Vec<f64>>], truth: &[f64]) -> String {
    let slot = slot_width(names.len());
    let width = LEFT + slot * coords.len() as f64 + 160.0;
    let all = samples.iter().flatten().flatten().cloned().chain(coords.iter().map(|&c| truth[c]));
    let (lo, hi) = nice_range(all, false);
    let f = Frame { width, lo, hi };
    let mut svg = String::new();
    header(&mut svg, width, title);
    axes(&mut svg, &f);
    for (ci, &c) in coords.iter().enumerate() {
        let x0 = LEFT + slot * ci as f64 + 10.0;
        let yt = f.y(truth[c]);
        let _ = writeln!(
            svg,
            r##"<line x1="{:.1}" y1="{yt:.1}" x2="{:.1}" y2="{yt:.1}" stroke="#cc0000" stroke-dasharray="4 2"/>"##,
            x0 - 4.0,
            x0 + 16.0 * names.len() as f64
        );
        for (ei, per_est) in samples.iter().enumerate() {
            let mut s: Vec<f64> = per_est[ci].iter().cloned().filter(|v| v.is_finite()).collect();
            if s.is_empty() {
                continue;
            }
            s.sort_by(f64::total_cmp);
            let (q1, q2, q3) = (quantile(&s, 0.25), quantile(&s, 0.5), quantile(&s, 0.75));
            let iqr = q3 - q1;
            let wl = s.iter().cloned().find(|v| *v >= q1 - 1.5 * iqr).unwrap_or(q1);
            let wh = s.iter().rev().cloned().find(|v| *v <= q3 + 1.5 * iqr).unwrap_or(q3);
            let x = x0 + 16.0 * ei as f64;
            let colour = PALETTE[ei % PALETTE.len()];
            let xm = x + 7.0;
            let _ = writeln!(svg, r#"<line x1="{xm:.1}" y1="{:.1}" x2="{xm:.1}" y2="{:.1}" stroke="{colour}"/>"#, f.y(wh), f.y(wl));
            let _ = writeln!(
                svg,
                r#"<rect x="{x:.1}" y="{:.1}" width="14" height="{:.1}" fill="white" stroke="{colour}"/>"#,
                f.y(q3),
                (f.y(q1) - f.y(q3)).max(0.5)
            );
            let _ = writeln!(
                svg,
                r#"<line x1="{x:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{colour}" stroke-width="2"/>"#,
                f.y(q2),
                x + 14.0,
                f.y(q2)
            );
            for v in s.iter().filter(|v| **v < wl || **v > wh) {
                let _ = writeln!(svg, r#"<circle cx="{xm:.1}" cy="{:.1}" r="1.5" fill="{colour}"/>"#, f.y(*v));
            }
        }
        let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, x0 + slot / 2.0 - 10.0, TOP + PLOT_H + 18.0, c + 1);
    }
    legend(&mut svg, width, names);
    svg.push_str("</svg>\n");
    svg
}

/// Renders `(file name, svg)` pairs without touching the file system.
pub fn render_plots(report: &StudyReport) -> Vec<(String, String)> {
    let names: Vec<&str> = report.results.iter().map(|r| r.name.as_str()).collect();
    let mut out = Vec::new();
    if names.is_empty() {
        return out;
    }
    let groups = [
        ("signal", (0..report.truth.len()).filter(|&c| report.truth[c] != 0.0).collect::<Vec<_>>()),
        ("null", (0..report.truth.len()).filter(|&c| report.truth[c] == 0.0).collect::<Vec<_>>()),
    ];
    for (group, coords) in groups {
        if coords.is_empty() {
            log::info!("no {group} coordinates; {group} panels omitted");
            continue;
        }
        let pick = |v: &Vec<f64>| coords.iter().map(|&c| v[c]).collect::<Vec<f64>>();
        let bias: Vec<Vec<f64>> = report.results.iter().map(|r| pick(&r.summary.bias)).collect();
        let rmse: Vec<Vec<f64>> = report.results.iter().map(|r| pick(&r.summary.rmse)).collect();
        let samples: Vec<Vec<Vec<f64>>> =
            report.results.iter().map(|r| coords.iter().map(|&c| r.rows.iter().map(|(_, e)| e[c]).collect()).collect()).collect();
        out.push((format!("bias-{group}.svg"), bar_panel(&format!("Bias, {group} coordinates"), &coords, &names, &bias)));
        out.push((format!("rmse-{group}.svg"), bar_panel(&format!("RMSE, {group} coordinates"), &coords, &names, &rmse)));
        out.push((format!("boxplot-{group}.svg"), box_panel(&format!("Estimates, {group} coordinates"), &coords, &names, &samples, &report.truth)));
    }
    out
}

pub fn emit_plots(report: &StudyReport, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for (name, svg) in render_plots(report) {
        let path = dir.join(name);
        fs::write(&path, svg).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::StudyConfig;
    use crate::harness::study::run_study;

    fn report() -> StudyReport {
        let src = r#"
study = "synthetic"
n = 50
p = 3
h = 3
r = 5
theta0 = [1.0, 0.0, -1.0]
estimators = ["identity", "jie-identity"]
[synthetic]
m = [[0.2, 0.0, 0.0], [0.0, 0.2, 0.0], [0.0, 0.0, 0.2]]
s = [0.1, 0.1, 0.1]
noise_scale = 1.0
"#;
        run_study(&StudyConfig::from_toml_str(src).unwrap()).unwrap()
    }

    #[test]
    fn panels_per_group_and_legend_order() {
        let rep = report();
        let plots = render_plots(&rep);
        let names: Vec<&str> = plots.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(names, ["bias-signal.svg", "rmse-signal.svg", "boxplot-signal.svg", "bias-null.svg", "rmse-null.svg", "boxplot-null.svg"]);
        let svg = &plots[0].1;
        let a = svg.find(">identity<").unwrap();
        let b = svg.find(">jie-identity<").unwrap();
        assert!(a < b);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
    }

    #[test]
    fn empty_group_omitted() {
        let mut rep = report();
        rep.truth = vec![1.0, 2.0, 3.0];
        let plots = render_plots(&rep);
        assert_eq!(plots.len(), 3);
        assert!(plots.iter().all(|(n, _)| n.ends_with("-signal.svg")));
    }

    #[test]
    fn rendering_is_deterministic() {
        let rep = report();
        assert_eq!(render_plots(&rep), render_plots(&rep));
    }

    #[test]
    fn quantiles() {
        let s = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&s, 0.5), 2.5);
        assert_eq!(quantile(&s, 0.0), 1.0);
        assert_eq!(quantile(&s, 1.0), 4.0);
    }
}
