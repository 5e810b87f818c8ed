//! Minimal data-faithful SVG plots.
//!
//! Structure is fixed so files can be checked mechanically: each line series
//! is exactly one `<polyline>`, each scatter point exactly one `<circle>`, and
//! axes, ticks and legend swatches are `<line>` elements.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use crate::error::{CliError, Result};
use crate::output::write_atomic;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;
const TICKS: usize = 5;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<[f64; 2]>,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<[f64; 2]>) -> Self {
        Self {
            label: label.into(),
            points,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlotData {
    Scatter(Vec<[f64; 2]>),
    Line(Vec<Series>),
    /// A base orbit with a highlighted window and alert-flagged pieces drawn over it.
    HighlightedOrbit {
        orbit: Vec<[f64; 2]>,
        window: Vec<[f64; 2]>,
        flagged: Vec<Vec<[f64; 2]>>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub data: PlotData,
}

impl Plot {
    pub fn new(
        title: impl Into<String>,
        x_label: impl Into<String>,
        y_label: impl Into<String>,
        data: PlotData,
    ) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            data,
        }
    }

    fn all_points(&self) -> Vec<[f64; 2]> {
        match &self.data {
            PlotData::Scatter(p) => p.clone(),
            PlotData::Line(series) => series
                .iter()
                .flat_map(|s| s.points.iter().copied())
                .collect(),
            PlotData::HighlightedOrbit {
                orbit,
                window,
                flagged,
            } => orbit
                .iter()
                .chain(window)
                .chain(flagged.iter().flatten())
                .copied()
                .collect(),
        }
    }

    fn check(&self) -> Result<()> {
        let empty = match &self.data {
            PlotData::Scatter(p) => p.is_empty(),
            PlotData::Line(series) => {
                series.is_empty() || series.iter().any(|s| s.points.is_empty())
            }
            PlotData::HighlightedOrbit { orbit, .. } => orbit.is_empty(),
        };
        if empty {
            return Err(CliError::Plot(format!("`{}` has no data", self.title)));
        }
        if self.all_points().iter().flatten().any(|v| !v.is_finite()) {
            return Err(CliError::Plot(format!(
                "`{}` contains non-finite values",
                self.title
            )));
        }
        Ok(())
    }
}

/// Keep at most `max` points by taking every k-th one (always keeping the last).
pub fn decimate(points: &[[f64; 2]], max: usize) -> Vec<[f64; 2]> {
    if points.len() <= max || max < 2 {
        return points.to_vec();
    }
    let stride = points.len().div_ceil(max - 1);
    let mut out: Vec<[f64; 2]> = points.iter().step_by(stride).copied().collect();
    if out.len() * stride - stride != points.len() - 1 {
        out.push(points[points.len() - 1]);
    }
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn padded_range(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        let pad = 0.03 * (hi - lo);
        (lo - pad, hi + pad)
    } else {
        let pad = if lo == 0.0 { 1.0 } else { 0.05 * lo.abs() };
        (lo - pad, hi + pad)
    }
}

fn tick_label(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e5 || v.abs() < 1e-3) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
            .trim_end_matches('0')
            .trim_end_matches('.')
            .to_string()
    }
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn px(&self, p: [f64; 2]) -> (f64, f64) {
        let u = (p[0] - self.x.0) / (self.x.1 - self.x.0);
        let v = (p[1] - self.y.0) / (self.y.1 - self.y.0);
        (
            LEFT + u * (WIDTH - LEFT - RIGHT),
            HEIGHT - BOTTOM - v * (HEIGHT - TOP - BOTTOM),
        )
    }

    fn coords(&self, points: &[[f64; 2]]) -> String {
        points
            .iter()
            .map(|p| {
                let (x, y) = self.px(*p);
                format!("{x:.2},{y:.2}")
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Render the plot as a standalone SVG document.
pub fn render_svg(plot: &Plot) -> Result<String> {
    plot.check()?;
    let pts = plot.all_points();
    let (xmin, xmax) = pts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| {
            (a.min(p[0]), b.max(p[0]))
        });
    let (ymin, ymax) = pts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| {
            (a.min(p[1]), b.max(p[1]))
        });
    let frame = Frame {
        x: padded_range(xmin, xmax),
        y: padded_range(ymin, ymax),
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(&plot.title)
    );

    let (x0, y0) = (LEFT, HEIGHT - BOTTOM);
    let (x1, y1) = (WIDTH - RIGHT, TOP);
    let _ = writeln!(
        s,
        r#"<line class="axis" x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<line class="axis" x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#
    );
    for i in 0..TICKS {
        let f = i as f64 / (TICKS - 1) as f64;
        let xv = frame.x.0 + f * (frame.x.1 - frame.x.0);
        let yv = frame.y.0 + f * (frame.y.1 - frame.y.0);
        let (tx, _) = frame.px([xv, frame.y.0]);
        let (_, ty) = frame.px([frame.x.0, yv]);
        let _ = writeln!(
            s,
            r#"<line class="tick" x1="{tx:.2}" y1="{y0}" x2="{tx:.2}" y2="{}" stroke="black"/>"#,
            y0 + 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{tx:.2}" y="{}" text-anchor="middle">{}</text>"#,
            y0 + 18.0,
            tick_label(xv)
        );
        let _ = writeln!(
            s,
            r#"<line class="tick" x1="{}" y1="{ty:.2}" x2="{x0}" y2="{ty:.2}" stroke="black"/>"#,
            x0 - 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#,
            x0 - 8.0,
            ty + 4.0,
            tick_label(yv)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 12.0,
        escape(&plot.x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(&plot.y_label)
    );

    match &plot.data {
        PlotData::Scatter(points) => {
            for p in points {
                let (x, y) = frame.px(*p);
                let _ = writeln!(
                    s,
                    r#"<circle cx="{x:.2}" cy="{y:.2}" r="2.5" fill="{}" fill-opacity="0.6"/>"#,
                    PALETTE[0]
                );
            }
        }
        PlotData::Line(series) => {
            for (i, ser) in series.iter().enumerate() {
                let color = PALETTE[i % PALETTE.len()];
                let _ = writeln!(
                    s,
                    r#"<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{}"/>"#,
                    frame.coords(&ser.points)
                );
                if series.len() > 1 || !ser.label.is_empty() {
                    let ly = TOP + 14.0 * i as f64 + 6.0;
                    let _ = writeln!(
                        s,
                        r#"<line class="legend" x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
                        x1 - 120.0,
                        x1 - 100.0
                    );
                    let _ = writeln!(
                        s,
                        r#"<text x="{}" y="{}">{}</text>"#,
                        x1 - 95.0,
                        ly + 4.0,
                        escape(&ser.label)
                    );
                }
            }
        }
        PlotData::HighlightedOrbit {
            orbit,
            window,
            flagged,
        } => {
            let _ = writeln!(
                s,
                r##"<polyline class="orbit" fill="none" stroke="#9a9a9a" stroke-width="0.6" points="{}"/>"##,
                frame.coords(orbit)
            );
            if !window.is_empty() {
                let _ = writeln!(
                    s,
                    r#"<polyline class="highlight" fill="none" stroke="{}" stroke-width="1.6" points="{}"/>"#,
                    PALETTE[0],
                    frame.coords(window)
                );
            }
            for piece in flagged.iter().filter(|p| !p.is_empty()) {
                let _ = writeln!(
                    s,
                    r#"<polyline class="alert" fill="none" stroke="{}" stroke-width="2.6" points="{}"/>"#,
                    PALETTE[1],
                    frame.coords(piece)
                );
            }
        }
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Render and atomically write `plot` to `path`. Nothing is written on error.
pub fn emit_plot(plot: &Plot, path: &Path) -> Result<()> {
    let svg = render_svg(plot)?;
    write_atomic(path, |w| {
        w.write_all(svg.as_bytes())
            .map_err(|e| CliError::io(path, e))
    })
}
