//! Static SVG plots: one panel per series, data with √N error bars and the
//! fitted curve.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use noonsim::experiment::{ExperimentKind, Series, SweepResult};

use crate::{CliError, CliResult};

const WIDTH: f64 = 640.0;
const PANEL: f64 = 240.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 28.0;
const BOTTOM: f64 = 42.0;
const CURVE_POINTS: usize = 400;

fn x_label(kind: ExperimentKind) -> &'static str {
    match kind {
        ExperimentKind::PhaseSweep => "phase φ (rad)",
        ExperimentKind::HomScan => "delay x (µm)",
        ExperimentKind::Brightness => "pump power (mW)",
        ExperimentKind::Calibration => "heater power (mW)",
    }
}

pub fn emit_plot(result: &SweepResult, path: &Path) -> CliResult<()> {
    if result.rows.is_empty() || result.series.iter().all(|s| s.x.is_empty()) {
        return Err(CliError::Runtime(format!("{}: nothing to plot", result.name)));
    }
    write_svg(&result.series, x_label(result.kind), path)
}

fn tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if !(1e-3..1e5).contains(&a) {
        format!("{v:.2e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn panel(svg: &mut String, s: &Series, xlabel: &str, top: f64) {
    let curve: Vec<(f64, f64)> = match &s.fit {
        Some(fit) => {
            let (lo, hi) = s.x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
            (0..CURVE_POINTS)
                .map(|i| {
                    let x = lo + (hi - lo) * i as f64 / (CURVE_POINTS - 1) as f64;
                    (x, fit.eval(x))
                })
                .collect()
        }
        None => Vec::new(),
    };
    let finite = |v: &f64| v.is_finite();
    let xs = s.x.iter().copied().filter(finite);
    let (x0, x1) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    let ys = s
        .y
        .iter()
        .zip(&s.sigma)
        .flat_map(|(y, e)| [y - e, y + e])
        .chain(curve.iter().map(|p| p.1))
        .filter(finite);
    let (mut y0, mut y1) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), y| (a.min(y), b.max(y)));
    y0 = y0.min(0.0);
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    let pad = 0.05 * (y1 - y0);
    let (y0, y1) = (y0 - pad, y1 + pad);
    let x1 = if x1 > x0 { x1 } else { x0 + 1.0 };
    let (w, h) = (WIDTH - LEFT - RIGHT, PANEL - TOP - BOTTOM);
    let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * w;
    let py = |y: f64| top + TOP + (1.0 - (y - y0) / (y1 - y0)) * h;

    let _ = writeln!(
        svg,
        r##"<g class="panel"><text x="{:.1}" y="{:.1}" font-size="13">{}</text>"##,
        LEFT,
        top + TOP - 10.0,
        escape(&match &s.fit {
            Some(f) => format!("{} ({}): V = {:.4} ± {:.4}", s.label, f.model, f.visibility, f.visibility_sigma),
            None => s.label.clone(),
        })
    );
    let _ = writeln!(
        svg,
        r##"<rect x="{LEFT:.1}" y="{:.1}" width="{w:.1}" height="{h:.1}" fill="none" stroke="#444"/>"##,
        top + TOP
    );
    for i in 0..=4 {
        let xv = x0 + (x1 - x0) * i as f64 / 4.0;
        let yv = y0 + (y1 - y0) * i as f64 / 4.0;
        let _ = writeln!(
            svg,
            r##"<text x="{:.1}" y="{:.1}" font-size="10" text-anchor="middle">{}</text>"##,
            px(xv),
            top + TOP + h + 14.0,
            tick(xv)
        );
        let _ = writeln!(
            svg,
            r##"<text x="{:.1}" y="{:.1}" font-size="10" text-anchor="end">{}</text>"##,
            LEFT - 4.0,
            py(yv) + 3.0,
            tick(yv)
        );
    }
    let _ = writeln!(
        svg,
        r##"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="middle">{}</text>"##,
        LEFT + w / 2.0,
        top + PANEL - 8.0,
        escape(xlabel)
    );
    for ((x, y), e) in s.x.iter().zip(&s.y).zip(&s.sigma) {
        if !(x.is_finite() && y.is_finite()) {
            continue;
        }
        let _ = writeln!(
            svg,
            r##"<line class="err" x1="{0:.2}" y1="{1:.2}" x2="{0:.2}" y2="{2:.2}" stroke="#1f77b4"/><circle class="data" cx="{0:.2}" cy="{3:.2}" r="2" fill="#1f77b4"/>"##,
            px(*x),
            py(y - e),
            py(y + e),
            py(*y)
        );
    }
    if !curve.is_empty() {
        let pts: Vec<String> = curve
            .iter()
            .filter(|p| p.1.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        let _ = writeln!(
            svg,
            r##"<polyline class="fit" points="{}" fill="none" stroke="#d62728" stroke-width="1.5"/>"##,
            pts.join(" ")
        );
    }
    svg.push_str("</g>\n");
}

pub fn write_svg(series: &[Series], xlabel: &str, path: &Path) -> CliResult<()> {
    let shown: Vec<&Series> = series.iter().filter(|s| !s.x.is_empty()).collect();
    if shown.is_empty() {
        return Err(CliError::Runtime("nothing to plot".into()));
    }
    let height = PANEL * shown.len() as f64;
    let mut svg = format!(
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif">
<rect width="100%" height="100%" fill="white"/>
"##
    );
    for (i, s) in shown.iter().enumerate() {
        panel(&mut svg, s, xlabel, PANEL * i as f64);
    }
    svg.push_str("</svg>\n");
    fs::write(path, svg).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}
