//! JSON, CSV and static SVG artifacts for experiment results.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bench::{BenchReport, BenchVariant};
use crate::compare::HalfspaceComparison;
use crate::error::{Error, Result};
use crate::montecarlo::McReport;
use crate::sim::SimRecord;

#[derive(Debug, Clone, PartialEq)]
pub enum Report {
    MonteCarlo(Vec<McReport>),
    Bench(BenchReport),
    Halfspace(HalfspaceComparison),
    Simulation(SimRecord),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub files: Vec<String>,
}

pub const MANIFEST_NAME: &str = "manifest.json";

struct Writer<'a> {
    dir: &'a Path,
    files: Vec<String>,
}

impl Writer<'_> {
    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn text(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.path(name);
        fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let path = self.path(name);
        let text = serde_json::to_string_pretty(value).map_err(|source| Error::Json { path, source })?;
        self.text(name, &(text + "\n"))
    }

    fn csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<()> {
        let path = self.path(name);
        let csv_err = |source| Error::Csv {
            path: path.clone(),
            source,
        };
        let mut writer = csv::Writer::from_path(&path).map_err(csv_err)?;
        for row in rows {
            writer.serialize(row).map_err(csv_err)?;
        }
        writer.flush().map_err(|e| Error::io(&path, e))?;
        self.files.push(name.to_string());
        Ok(())
    }
}

/// Writes every report plus a manifest listing the files in write order.
/// Output is a pure function of the inputs.
pub fn emit_reports(reports: &[Report], out_dir: &Path) -> Result<Manifest> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut writer = Writer {
        dir: out_dir,
        files: Vec::new(),
    };
    for report in reports {
        match report {
            Report::MonteCarlo(mc) => emit_monte_carlo(&mut writer, mc)?,
            Report::Bench(bench) => emit_bench(&mut writer, bench)?,
            Report::Halfspace(cmp) => emit_halfspace(&mut writer, cmp)?,
            Report::Simulation(record) => emit_simulation(&mut writer, record)?,
        }
    }
    let manifest = Manifest {
        files: writer.files.clone(),
    };
    writer.json(MANIFEST_NAME, &manifest)?;
    Ok(manifest)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McTrialRow {
    pub scenario: String,
    pub metric: String,
    pub trial: usize,
    pub min_distance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchCsvRow {
    pub variant: String,
    pub samples: usize,
    pub build_median_ms: f64,
    pub build_mean_ms: f64,
    pub solve_median_ms: f64,
    pub solve_mean_ms: f64,
    pub total_median_ms: f64,
    pub total_mean_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfspaceCsvRow {
    pub label: String,
    pub hx: f64,
    pub hy: f64,
    pub g_tilde: f64,
    pub g_star: f64,
    pub ego_residual: f64,
    pub ego_safe: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepCsvRow {
    pub t: usize,
    pub px: f64,
    pub py: f64,
    pub vx: f64,
    pub vy: f64,
    pub ux: f64,
    pub uy: f64,
    pub status: String,
    pub min_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceCsvRow {
    pub t: usize,
    pub obstacle: usize,
    pub ox: f64,
    pub oy: f64,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingCsvRow {
    pub t: usize,
    pub planner_ms: f64,
    pub halfspace_ms: f64,
    pub filter_ms: f64,
}

fn emit_monte_carlo(w: &mut Writer<'_>, reports: &[McReport]) -> Result<()> {
    let Some(first) = reports.first() else {
        return Ok(());
    };
    let stem = format!("montecarlo_{}", first.scenario);
    w.json(&format!("{stem}.json"), &reports)?;
    let rows: Vec<McTrialRow> = reports
        .iter()
        .flat_map(|r| {
            r.per_trial_min_distance
                .iter()
                .enumerate()
                .map(move |(trial, d)| McTrialRow {
                    scenario: r.scenario.clone(),
                    metric: r.metric.to_string(),
                    trial,
                    min_distance: *d,
                })
        })
        .collect();
    w.csv(&format!("{stem}.csv"), &rows)?;
    w.text(&format!("{stem}_boxplot.svg"), &boxplot_svg(reports))?;
    w.text(&format!("{stem}_traces.svg"), &traces_svg(reports))
}

fn emit_bench(w: &mut Writer<'_>, report: &BenchReport) -> Result<()> {
    w.json("bench.json", report)?;
    let rows: Vec<BenchCsvRow> = report
        .rows
        .iter()
        .map(|r| BenchCsvRow {
            variant: r.variant.as_str().to_string(),
            samples: r.samples,
            build_median_ms: r.build_ms.median,
            build_mean_ms: r.build_ms.mean,
            solve_median_ms: r.solve_ms.median,
            solve_mean_ms: r.solve_ms.mean,
            total_median_ms: r.total_ms.median,
            total_mean_ms: r.total_ms.mean,
        })
        .collect();
    w.csv("bench.csv", &rows)?;
    w.text("bench_timing.svg", &timing_svg(report))
}

fn emit_halfspace(w: &mut Writer<'_>, cmp: &HalfspaceComparison) -> Result<()> {
    w.json("halfspaces.json", cmp)?;
    let rows: Vec<HalfspaceCsvRow> = cmp
        .rows
        .iter()
        .map(|r| HalfspaceCsvRow {
            label: r.label(),
            hx: r.halfspace.h[0],
            hy: r.halfspace.h[1],
            g_tilde: r.halfspace.g_tilde,
            g_star: r.halfspace.g_star,
            ego_residual: r.ego_residual,
            ego_safe: r.ego_safe(),
        })
        .collect();
    w.csv("halfspaces.csv", &rows)?;
    w.text("halfspaces.svg", &halfspace_svg(cmp))
}

fn emit_simulation(w: &mut Writer<'_>, record: &SimRecord) -> Result<()> {
    let stem = format!("sim_{}_{}", record.scenario, record.metric);
    w.json(&format!("{stem}.json"), record)?;
    let steps: Vec<StepCsvRow> = record
        .steps
        .iter()
        .map(|s| StepCsvRow {
            t: s.t,
            px: s.ego_state[0],
            py: s.ego_state[1],
            vx: s.ego_state[2],
            vy: s.ego_state[3],
            ux: s.control[0],
            uy: s.control[1],
            status: format!("{:?}", s.status).to_lowercase(),
            min_distance: s.distances.iter().copied().fold(f64::INFINITY, f64::min),
        })
        .collect();
    w.csv(&format!("{stem}_steps.csv"), &steps)?;
    let distances: Vec<DistanceCsvRow> = record
        .steps
        .iter()
        .flat_map(|s| {
            s.obstacle_positions
                .iter()
                .zip(&s.distances)
                .enumerate()
                .map(move |(obstacle, (p, d))| DistanceCsvRow {
                    t: s.t,
                    obstacle,
                    ox: p[0],
                    oy: p[1],
                    distance: *d,
                })
        })
        .collect();
    w.csv(&format!("{stem}_distances.csv"), &distances)?;
    let timings: Vec<TimingCsvRow> = record
        .timings
        .iter()
        .enumerate()
        .map(|(t, s)| TimingCsvRow {
            t,
            planner_ms: s.planner_ms,
            halfspace_ms: s.halfspace_ms,
            filter_ms: s.filter_ms,
        })
        .collect();
    w.csv(&format!("{stem}_timings.csv"), &timings)?;
    w.text(&format!("{stem}_trajectory.svg"), &trajectory_svg(record))
}

const PALETTE: [&str; 6] = ["#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 50.0;

/// Affine map from data coordinates to the plot area.
struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn new(x: (f64, f64), y: (f64, f64)) -> Self {
        let pad = |(lo, hi): (f64, f64)| {
            if (hi - lo).abs() < 1e-12 {
                (lo - 1.0, hi + 1.0)
            } else {
                (lo, hi)
            }
        };
        Frame { x: pad(x), y: pad(y) }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - 2.0 * MARGIN)
    }

    fn scale(&self) -> f64 {
        (WIDTH - 2.0 * MARGIN) / (self.x.1 - self.x.0)
    }
}

fn svg_open(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"11\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
        WIDTH / 2.0,
        escape(title)
    )
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn axes(svg: &mut String, frame: &Frame, x_label: &str, y_label: &str) {
    let (x0, x1) = (frame.px(frame.x.0), frame.px(frame.x.1));
    let (y0, y1) = (frame.py(frame.y.0), frame.py(frame.y.1));
    let _ = writeln!(
        svg,
        "<rect x=\"{x0:.1}\" y=\"{y1:.1}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"none\" stroke=\"#444\"/>",
        x1 - x0,
        y0 - y1
    );
    for (v, pos) in [(frame.y.0, y0), (frame.y.1, y1)] {
        let _ = writeln!(
            svg,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{v:.3}</text>",
            x0 - 4.0,
            pos + 4.0
        );
    }
    for (v, pos) in [(frame.x.0, x0), (frame.x.1, x1)] {
        let _ = writeln!(
            svg,
            "<text x=\"{pos:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{v:.3}</text>",
            y0 + 14.0
        );
    }
    let _ = writeln!(
        svg,
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>",
        (x0 + x1) / 2.0,
        HEIGHT - 10.0,
        escape(x_label)
    );
    let _ = writeln!(
        svg,
        "<text x=\"14\" y=\"{:.1}\" transform=\"rotate(-90 14 {:.1})\" text-anchor=\"middle\">{}</text>",
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(y_label)
    );
}

fn polyline(svg: &mut String, frame: &Frame, points: &[(f64, f64)], color: &str, extra: &str) {
    let coords: Vec<String> = points
        .iter()
        .map(|(x, y)| format!("{:.2},{:.2}", frame.px(*x), frame.py(*y)))
        .collect();
    let _ = writeln!(
        svg,
        "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" {extra}/>",
        coords.join(" ")
    );
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// Box plot per metric. Whiskers span min..max; the `data-*` attributes carry
/// the summary values the box was drawn from.
pub fn boxplot_svg(reports: &[McReport]) -> String {
    let title = format!(
        "Distance to collision, {}",
        reports.first().map_or("", |r| r.scenario.as_str())
    );
    let mut svg = svg_open(&title);
    let (mut lo, mut hi) = bounds(reports.iter().filter_map(|r| r.summary).flat_map(|s| [s.min, s.max]));
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    lo = lo.min(0.0);
    let frame = Frame::new((0.0, reports.len().max(1) as f64), (lo, hi));
    axes(&mut svg, &frame, "metric", "min distance to collision [m]");
    let _ = writeln!(
        svg,
        "<line x1=\"{:.1}\" x2=\"{:.1}\" y1=\"{y:.1}\" y2=\"{y:.1}\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>",
        frame.px(frame.x.0),
        frame.px(frame.x.1),
        y = frame.py(0.0)
    );
    for (i, report) in reports.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let cx = frame.px(i as f64 + 0.5);
        let half = 0.25 * frame.scale();
        let _ = writeln!(
            svg,
            "<text x=\"{cx:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>",
            HEIGHT - MARGIN + 28.0,
            report.metric
        );
        let Some(s) = report.summary else { continue };
        let _ = writeln!(
            svg,
            "<g class=\"box\" data-metric=\"{}\" data-min=\"{}\" data-q1=\"{}\" data-median=\"{}\" data-q3=\"{}\" data-max=\"{}\">",
            report.metric, s.min, s.q1, s.median, s.q3, s.max
        );
        let _ = writeln!(
            svg,
            "<line x1=\"{cx:.1}\" x2=\"{cx:.1}\" y1=\"{:.2}\" y2=\"{:.2}\" stroke=\"{color}\"/>",
            frame.py(s.min),
            frame.py(s.max)
        );
        let _ = writeln!(
            svg,
            "<rect x=\"{:.1}\" y=\"{:.2}\" width=\"{:.1}\" height=\"{:.2}\" fill=\"{color}\" fill-opacity=\"0.3\" stroke=\"{color}\"/>",
            cx - half,
            frame.py(s.q3),
            2.0 * half,
            (frame.py(s.q1) - frame.py(s.q3)).max(0.5)
        );
        for v in [s.min, s.median, s.max] {
            let _ = writeln!(
                svg,
                "<line x1=\"{:.1}\" x2=\"{:.1}\" y1=\"{y:.2}\" y2=\"{y:.2}\" stroke=\"{color}\" stroke-width=\"2\"/>",
                cx - half,
                cx + half,
                y = frame.py(v)
            );
        }
        svg.push_str("</g>\n");
    }
    svg.push_str("</svg>\n");
    svg
}

pub fn traces_svg(reports: &[McReport]) -> String {
    let title = format!(
        "Distance to collision traces, {}",
        reports.first().map_or("", |r| r.scenario.as_str())
    );
    let mut svg = svg_open(&title);
    let steps = reports
        .iter()
        .flat_map(|r| r.traces.iter().map(Vec::len))
        .max()
        .unwrap_or(1);
    let (mut lo, mut hi) = bounds(reports.iter().flat_map(|r| r.traces.iter().flatten().copied()));
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    let frame = Frame::new((0.0, steps.saturating_sub(1).max(1) as f64), (lo.min(0.0), hi));
    axes(&mut svg, &frame, "step", "distance to collision [m]");
    for (i, report) in reports.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        for trace in &report.traces {
            let points: Vec<(f64, f64)> = trace.iter().enumerate().map(|(k, d)| (k as f64, *d)).collect();
            polyline(&mut svg, &frame, &points, color, "stroke-opacity=\"0.15\"");
        }
        let _ = writeln!(
            svg,
            "<text x=\"{:.1}\" y=\"{:.1}\" fill=\"{color}\">{}</text>",
            WIDTH - MARGIN - 60.0,
            MARGIN + 14.0 * i as f64,
            report.metric
        );
    }
    svg.push_str("</svg>\n");
    svg
}

pub fn timing_svg(report: &BenchReport) -> String {
    let mut svg = svg_open("Halfspace computation time (median)");
    let positive = |v: f64| v.max(1e-6);
    let (lo, hi) = bounds(report.rows.iter().map(|r| positive(r.total_ms.median).log10()));
    let (xl, xh) = bounds(report.sample_counts.iter().map(|n| (*n as f64).log10()));
    let frame = Frame::new((xl, xh), (lo.min(hi), hi));
    axes(&mut svg, &frame, "log10 samples", "log10 total time [ms]");
    for (i, variant) in BenchVariant::ALL.iter().enumerate() {
        let points: Vec<(f64, f64)> = report
            .rows
            .iter()
            .filter(|r| r.variant == *variant)
            .map(|r| ((r.samples as f64).log10(), positive(r.total_ms.median).log10()))
            .collect();
        if points.is_empty() {
            continue;
        }
        let color = PALETTE[i % PALETTE.len()];
        polyline(&mut svg, &frame, &points, color, "stroke-width=\"2\"");
        let _ = writeln!(
            svg,
            "<text x=\"{:.1}\" y=\"{:.1}\" fill=\"{color}\">{}</text>",
            MARGIN + 8.0,
            MARGIN + 14.0 * i as f64,
            variant.as_str()
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Clips the line `h·y + c = 0` to the frame.
fn halfspace_segment(frame: &Frame, h: &[f64], c: f64) -> Option<((f64, f64), (f64, f64))> {
    let mut pts = Vec::new();
    if h[1].abs() > 1e-12 {
        for x in [frame.x.0, frame.x.1] {
            let y = -(c + h[0] * x) / h[1];
            if y >= frame.y.0 - 1e-9 && y <= frame.y.1 + 1e-9 {
                pts.push((x, y));
            }
        }
    }
    if h[0].abs() > 1e-12 {
        for y in [frame.y.0, frame.y.1] {
            let x = -(c + h[1] * y) / h[0];
            if x >= frame.x.0 - 1e-9 && x <= frame.x.1 + 1e-9 {
                pts.push((x, y));
            }
        }
    }
    (pts.len() >= 2).then(|| (pts[0], pts[pts.len() - 1]))
}

fn circle(svg: &mut String, frame: &Frame, c: &[f64], r: f64, style: &str) {
    let _ = writeln!(
        svg,
        "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"{:.2}\" {style}/>",
        frame.px(c[0]),
        frame.py(c[1]),
        r * frame.scale()
    );
}

pub fn halfspace_svg(cmp: &HalfspaceComparison) -> String {
    let mut svg = svg_open("Safe halfspaces");
    let frame = Frame::new((-2.0, 2.0), (-1.6, 1.2));
    axes(&mut svg, &frame, "x [m]", "y [m]");
    for p in &cmp.samples {
        circle(&mut svg, &frame, p, 0.01, "fill=\"#555\"");
    }
    circle(
        &mut svg,
        &frame,
        &cmp.config.obstacle_nominal,
        cmp.config.obstacle_radius,
        "fill=\"none\" stroke=\"black\"",
    );
    circle(
        &mut svg,
        &frame,
        &cmp.config.ego_reference,
        cmp.config.ego_radius,
        "fill=\"none\" stroke=\"#1f77b4\"",
    );
    for (i, row) in cmp.rows.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if let Some((a, b)) = halfspace_segment(&frame, &row.halfspace.h, row.halfspace.g_star) {
            polyline(&mut svg, &frame, &[a, b], color, "stroke-width=\"1.5\"");
        }
        let _ = writeln!(
            svg,
            "<text x=\"{:.1}\" y=\"{:.1}\" fill=\"{color}\">{} {}</text>",
            MARGIN + 8.0,
            MARGIN + 14.0 * i as f64,
            escape(&row.label()),
            if row.ego_safe() { "safe" } else { "violated" }
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Ego and obstacle paths with the step-`t+1` halfspaces drawn at a few
/// evenly spaced snapshots.
pub fn trajectory_svg(record: &SimRecord) -> String {
    let mut svg = svg_open(&format!("{} with {} halfspaces", record.scenario, record.metric));
    let xs = record
        .steps
        .iter()
        .flat_map(|s| std::iter::once(&s.ego_state[..2]).chain(s.obstacle_positions.iter().map(|p| &p[..])))
        .map(|p| (p[0], p[1]));
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (x, y) in xs {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (-1.0, 1.0, -1.0, 1.0);
    }
    let frame = Frame::new((x0 - 0.6, x1 + 0.6), (y0 - 0.6, y1 + 0.6));
    axes(&mut svg, &frame, "x [m]", "y [m]");

    let stride = (record.steps.len() / 5).max(1);
    for step in record.steps.iter().step_by(stride) {
        for hs in step.halfspaces.iter().filter(|h| h.t == step.t + 1) {
            if let Some((a, b)) = halfspace_segment(&frame, &hs.h, hs.g_star) {
                polyline(&mut svg, &frame, &[a, b], "#2ca02c", "stroke-opacity=\"0.5\"");
            }
        }
        circle(&mut svg, &frame, &step.ego_state, 0.3, "fill=\"#1f77b4\" fill-opacity=\"0.15\"");
        for p in &step.obstacle_positions {
            circle(&mut svg, &frame, p, 0.3, "fill=\"#000\" fill-opacity=\"0.1\"");
        }
    }
    let ego: Vec<(f64, f64)> = record
        .steps
        .iter()
        .map(|s| (s.ego_state[0], s.ego_state[1]))
        .chain(std::iter::once((record.final_state[0], record.final_state[1])))
        .collect();
    polyline(&mut svg, &frame, &ego, "#1f77b4", "stroke-width=\"2\"");
    let obstacles = record.steps.first().map_or(0, |s| s.obstacle_positions.len());
    for i in 0..obstacles {
        let path: Vec<(f64, f64)> = record
            .steps
            .iter()
            .map(|s| (s.obstacle_positions[i][0], s.obstacle_positions[i][1]))
            .collect();
        polyline(&mut svg, &frame, &path, PALETTE[(i + 3) % PALETTE.len()], "stroke-dasharray=\"4 2\"");
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_list_writes_only_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = emit_reports(&[], dir.path()).unwrap();
        assert!(manifest.files.is_empty());
        let entries: Vec<_> = fs::read_dir(dir.path()).unwrap().collect();
        assert_eq!(entries.len(), 1);
        assert!(dir.path().join(MANIFEST_NAME).exists());
    }

    #[test]
    fn segment_clips_to_frame() {
        let frame = Frame::new((-1.0, 1.0), (-1.0, 1.0));
        let (a, b) = halfspace_segment(&frame, &[1.0, 0.0], -0.5).unwrap();
        assert!((a.0 - 0.5).abs() < 1e-12 && (b.0 - 0.5).abs() < 1e-12);
        assert!(halfspace_segment(&frame, &[1.0, 0.0], -5.0).is_none());
    }
}
