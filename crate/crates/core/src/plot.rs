//! SVG convergence plots of trace CSVs.
//!
//! Output is plain text built with fixed-precision formatting, so equal
//! inputs give byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{IlcError, Result};
use crate::trace::{read_records, IterationRecord};

/// Costs below this are clamped before taking logarithms.
pub const COST_FLOOR: f64 = 1e-18;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 200.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlotOptions {
    /// Divide each trace by its first cost.
    pub normalize: bool,
    pub floor: f64,
}

impl Default for PlotOptions {
    fn default() -> Self {
        Self {
            normalize: false,
            floor: COST_FLOOR,
        }
    }
}

/// One curve: a legend label and its records.
#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub records: Vec<IterationRecord>,
}

/// Legend label for a trace file: the file stem without a `_seed<k>` suffix,
/// so all seeds of one solver share an entry.
pub fn series_label(path: &Path) -> String {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    match stem.rfind("_seed") {
        Some(at) if stem[at + 5..].chars().all(|c| c.is_ascii_digit()) && at + 5 < stem.len() => {
            stem[..at].to_string()
        }
        _ => stem,
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn points(series: &Series, opts: &PlotOptions) -> Vec<(f64, f64)> {
    let scale = match (opts.normalize, series.records.first()) {
        (true, Some(r)) if r.cost_measured > 0.0 && r.cost_measured.is_finite() => r.cost_measured,
        _ => 1.0,
    };
    series
        .records
        .iter()
        .filter(|r| r.cost_measured.is_finite())
        .map(|r| {
            let c = (r.cost_measured / scale).max(opts.floor);
            (r.experiments_cum as f64, c.log10())
        })
        .collect()
}

/// Renders log10(measured cost) against cumulative experiments.
pub fn render_svg(series: &[Series], opts: &PlotOptions) -> String {
    let curves: Vec<Vec<(f64, f64)>> = series.iter().map(|s| points(s, opts)).collect();
    let all = curves.iter().flatten();
    let x_max = all.clone().map(|p| p.0).fold(0.0_f64, f64::max).max(1.0);
    let (y_lo, y_hi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        (lo.min(p.1), hi.max(p.1))
    });
    let (mut y_lo, mut y_hi) = if y_lo.is_finite() { (y_lo.floor(), y_hi.ceil()) } else { (0.0, 1.0) };
    if y_hi <= y_lo {
        y_lo -= 1.0;
        y_hi += 1.0;
    }

    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + x / x_max * pw;
    let sy = |y: f64| TOP + (y_hi - y) / (y_hi - y_lo) * ph;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<rect x="{LEFT:.2}" y="{TOP:.2}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="black"/>"#
    );

    // decade ticks, thinned to at most ~10 labels
    let decades = (y_hi - y_lo) as i64;
    let step = (decades / 10 + 1).max(1);
    let mut d = y_lo as i64;
    while d <= y_hi as i64 {
        let y = sy(d as f64);
        let _ = writeln!(
            out,
            r##"<line x1="{LEFT:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/>"##,
            LEFT + pw
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">1e{d}</text>"#,
            LEFT - 6.0,
            y + 4.0
        );
        d += step;
    }
    for k in 0..=4 {
        let x = x_max * k as f64 / 4.0;
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            sx(x),
            TOP + ph + 18.0,
            x.round() as u64
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">experiments</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        out,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        if opts.normalize { "cost / initial cost" } else { "cost" }
    );

    let mut legend: Vec<&str> = Vec::new();
    for (s, pts) in series.iter().zip(&curves) {
        let idx = legend.iter().position(|l| *l == s.label).unwrap_or_else(|| {
            legend.push(&s.label);
            legend.len() - 1
        });
        let coords: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"><title>{}</title></polyline>"#,
            PALETTE[idx % PALETTE.len()],
            coords.join(" "),
            escape(&s.label)
        );
    }
    for (k, label) in legend.iter().enumerate() {
        let y = TOP + 10.0 + 18.0 * k as f64;
        let x = LEFT + pw + 15.0;
        let _ = writeln!(
            out,
            r#"<line x1="{x:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{}" stroke-width="3"/>"#,
            x + 20.0,
            PALETTE[k % PALETTE.len()]
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            x + 26.0,
            y + 4.0,
            escape(label)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Result of [`plot_files`]: the SVG plus one warning per skipped file.
#[derive(Debug)]
pub struct PlotReport {
    pub svg: String,
    pub plotted: usize,
    pub warnings: Vec<String>,
}

fn load_series(path: &Path) -> Result<Series> {
    let records = read_records(fs::File::open(path)?)?;
    if records.is_empty() {
        return Err(IlcError::Parse("trace has no records".into()));
    }
    Ok(Series {
        label: series_label(path),
        records,
    })
}

/// Reads each trace; unreadable or empty ones become warnings. Errors only
/// when no trace could be read.
pub fn plot_files(paths: &[PathBuf], opts: &PlotOptions) -> Result<PlotReport> {
    let mut series = Vec::new();
    let mut warnings = Vec::new();
    for p in paths {
        match load_series(p) {
            Ok(s) => series.push(s),
            Err(e) => warnings.push(format!("skipping {}: {e}", p.display())),
        }
    }
    if series.is_empty() {
        return Err(IlcError::Config(format!(
            "no readable traces among {} file(s)",
            paths.len()
        )));
    }
    Ok(PlotReport {
        svg: render_svg(&series, opts),
        plotted: series.len(),
        warnings,
    })
}
