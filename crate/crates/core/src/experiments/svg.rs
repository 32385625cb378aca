//! Two-panel SVG figure: per-method densities of the `tau` estimates, and the
//! survival function of the squared standardized `tau` errors against chi^2_1.

use std::fmt::Write;

use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::statistics::{Data, OrderStatistics};

use crate::likelihood::Method;
use crate::models::Param;
use crate::uncertainty::{coverage_stats, IntervalEstimate};

use super::kde::smoothed_histogram;
use super::runner::ScenarioReport;

const WIDTH: f64 = 960.0;
const HEIGHT: f64 = 420.0;
const PANEL_W: f64 = 400.0;
const PANEL_H: f64 = 300.0;
const TOP: f64 = 50.0;
const LEFTS: [f64; 2] = [70.0, 550.0];

fn color(method: Method) -> &'static str {
    match method {
        Method::Wls => "#d62728",
        Method::Mle => "#1f77b4",
        Method::Whittle => "#2ca02c",
    }
}

struct Axes {
    left: f64,
    x: (f64, f64),
    y: (f64, f64),
    log: bool,
}

impl Axes {
    fn map(&self, x: f64, y: f64) -> (f64, f64) {
        let t = |v: f64| if self.log { v.log10() } else { v };
        let (x0, x1) = (t(self.x.0), t(self.x.1));
        let (y0, y1) = (t(self.y.0), t(self.y.1));
        let px = self.left + PANEL_W * (t(x) - x0) / (x1 - x0);
        let py = TOP + PANEL_H * (1.0 - (t(y) - y0) / (y1 - y0));
        (px, py)
    }

    fn polyline(&self, svg: &mut String, pts: impl Iterator<Item = (f64, f64)>, stroke: &str, dash: bool) {
        let mut coords = String::new();
        for (x, y) in pts {
            let in_range = x >= self.x.0 && x <= self.x.1 && y.is_finite();
            if !in_range {
                continue;
            }
            let (px, py) = self.map(x, y.clamp(self.y.0, self.y.1));
            let _ = write!(coords, "{px:.2},{py:.2} ");
        }
        if coords.is_empty() {
            return;
        }
        let dash = if dash { " stroke-dasharray=\"5,4\"" } else { "" };
        let _ = writeln!(
            svg,
            "<polyline fill=\"none\" stroke=\"{stroke}\" stroke-width=\"1.5\"{dash} points=\"{}\"/>",
            coords.trim_end()
        );
    }

    fn frame(&self, svg: &mut String, title: &str, xlabel: &str, ylabel: &str) {
        let (l, r) = (self.left, self.left + PANEL_W);
        let (t, b) = (TOP, TOP + PANEL_H);
        let _ = writeln!(
            svg,
            "<rect x=\"{l}\" y=\"{t}\" width=\"{PANEL_W}\" height=\"{PANEL_H}\" fill=\"none\" stroke=\"#444\"/>"
        );
        let _ = writeln!(
            svg,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"14\">{title}</text>",
            (l + r) / 2.0,
            t - 12.0
        );
        let _ = writeln!(
            svg,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"12\">{xlabel}</text>",
            (l + r) / 2.0,
            b + 36.0
        );
        let _ = writeln!(
            svg,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 {:.1} {:.1})\">{ylabel}</text>",
            l - 45.0,
            (t + b) / 2.0,
            l - 45.0,
            (t + b) / 2.0
        );
        for (i, frac) in [0.0, 0.25, 0.5, 0.75, 1.0].iter().enumerate() {
            let (vx, vy) = if self.log {
                let lx = self.x.0.log10() + frac * (self.x.1.log10() - self.x.0.log10());
                let ly = self.y.0.log10() + frac * (self.y.1.log10() - self.y.0.log10());
                (10f64.powf(lx), 10f64.powf(ly))
            } else {
                (
                    self.x.0 + frac * (self.x.1 - self.x.0),
                    self.y.0 + frac * (self.y.1 - self.y.0),
                )
            };
            let (px, _) = self.map(vx, self.y.0);
            let (_, py) = self.map(self.x.0, vy);
            let _ = writeln!(
                svg,
                "<text x=\"{px:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"10\">{}</text>",
                b + 16.0,
                tick(vx)
            );
            if i > 0 || !self.log {
                let _ = writeln!(
                    svg,
                    "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\" font-size=\"10\">{}</text>",
                    l - 4.0,
                    py + 3.0,
                    tick(vy)
                );
            }
        }
    }
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-2 || v.abs() >= 1e3) {
        format!("{v:.0e}")
    } else {
        format!("{v:.3}").trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn legend(svg: &mut String, left: f64, entries: &[(String, &str, bool)]) {
    for (i, (label, stroke, dash)) in entries.iter().enumerate() {
        let y = TOP + 16.0 + 16.0 * i as f64;
        let x = left + PANEL_W - 120.0;
        let dash = if *dash { " stroke-dasharray=\"5,4\"" } else { "" };
        let _ = writeln!(
            svg,
            "<line x1=\"{x:.1}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" stroke=\"{stroke}\" stroke-width=\"1.5\"{dash}/>",
            x + 24.0
        );
        let _ = writeln!(
            svg,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\">{label}</text>",
            x + 30.0,
            y + 4.0
        );
    }
}

fn density_panel(svg: &mut String, report: &ScenarioReport) {
    let truth = report.truth.tau();
    let methods = &report.scenario.methods;
    let pooled: Vec<f64> = methods
        .iter()
        .flat_map(|&m| report.estimates(m, Param::Tau))
        .filter(|v| v.is_finite())
        .collect();
    let (mut lo, mut hi) = if pooled.is_empty() {
        (0.0, 2.0 * truth)
    } else {
        let mut data = Data::new(pooled.clone());
        (data.quantile(0.005), data.quantile(0.995))
    };
    lo = lo.min(truth);
    hi = hi.max(truth);
    let pad = 0.05 * (hi - lo).max(1e-12);
    let (lo, hi) = ((lo - pad).max(0.0), hi + pad);

    let curves: Vec<(Method, Vec<(f64, f64)>)> = methods
        .iter()
        .filter_map(|&m| {
            let d = smoothed_histogram(&report.estimates(m, Param::Tau), None)?;
            Some((m, d.x.into_iter().zip(d.y).collect()))
        })
        .collect();
    let ymax = curves
        .iter()
        .flat_map(|(_, c)| c.iter().filter(|(x, _)| *x >= lo && *x <= hi).map(|p| p.1))
        .fold(0.0, f64::max);
    let axes = Axes {
        left: LEFTS[0],
        x: (lo, hi),
        y: (0.0, if ymax > 0.0 { 1.05 * ymax } else { 1.0 }),
        log: false,
    };
    axes.frame(svg, "smoothed histogram of tau estimates", "tau estimate", "density");
    for (m, c) in &curves {
        axes.polyline(svg, c.iter().copied(), color(*m), false);
    }
    axes.polyline(svg, [(truth, axes.y.0), (truth, axes.y.1)].into_iter(), "#777", true);
    let mut entries: Vec<(String, &str, bool)> = curves.iter().map(|(m, _)| (m.to_string(), color(*m), false)).collect();
    entries.push(("true tau".into(), "#777", true));
    legend(svg, LEFTS[0], &entries);
}

fn error_panel(svg: &mut String, report: &ScenarioReport) {
    let level = report.scenario.level;
    let mut series = Vec::new();
    for &m in &report.scenario.methods {
        let ivs: Vec<IntervalEstimate> = report
            .rows
            .iter()
            .filter(|r| r.method == m && r.param == Param::Tau && r.converged)
            .filter_map(|r| IntervalEstimate::wald(Param::Tau, r.estimate?, r.std_err?, level).ok())
            .collect();
        if let Some(cov) = coverage_stats(&ivs, &report.truth) {
            series.push((m, cov.squared_z));
        }
    }
    let count = series.iter().map(|(_, z)| z.len()).max().unwrap_or(1).max(1);
    let x_lo = 1e-3;
    let x_hi = series
        .iter()
        .flat_map(|(_, z)| z.last().copied())
        .fold(100.0, f64::max)
        .min(1e6);
    let axes = Axes {
        left: LEFTS[1],
        x: (x_lo, x_hi),
        y: (0.5 / count as f64, 1.0),
        log: true,
    };
    axes.frame(
        svg,
        "squared standardized tau errors",
        "((estimate - truth) / SE)^2",
        "fraction exceeding",
    );
    for (m, z2) in &series {
        let k = z2.len() as f64;
        let pts = z2.iter().enumerate().map(|(i, &z)| (z, (k - i as f64) / k));
        axes.polyline(svg, pts, color(*m), false);
    }
    let chi2 = ChiSquared::new(1.0).expect("one degree of freedom");
    let reference = (0..=200).map(|i| {
        let x = 10f64.powf(x_lo.log10() + (x_hi.log10() - x_lo.log10()) * i as f64 / 200.0);
        (x, chi2.sf(x))
    });
    axes.polyline(svg, reference, "#000", true);
    let mut entries: Vec<(String, &str, bool)> = series.iter().map(|(m, _)| (m.to_string(), color(*m), false)).collect();
    entries.push(("chi-square(1)".into(), "#000", true));
    legend(svg, LEFTS[1], &entries);
}

pub fn render_svg(report: &ScenarioReport) -> String {
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\">"
    );
    let _ = writeln!(svg, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    let s = &report.scenario;
    let _ = writeln!(
        svg,
        "<text x=\"{:.1}\" y=\"20\" text-anchor=\"middle\" font-size=\"15\">{}: {}, n = {}, dt = {} tau, {} replicates</text>",
        WIDTH / 2.0,
        s.name,
        s.kind,
        s.n,
        s.dt_over_tau,
        s.replicates
    );
    density_panel(&mut svg, report);
    error_panel(&mut svg, report);
    svg.push_str("</svg>\n");
    svg
}
