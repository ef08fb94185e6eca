//! Dependency-free SVG scatter plot of a 2-D embedding.

use std::fmt::Write as _;

use rotor_vrae::numerics::Matrix;

use crate::error::{CliError, CliResult};

/// Normal, then zones 1 to 3 (or "iced" in the two-class task).
pub const CLASS_COLORS: [&str; 4] = ["#d62728", "#1f77b4", "#2ca02c", "#000000"];

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 140.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 60.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Maps `[lo, hi]` onto `[a, b]`, centring a degenerate range.
fn scaler(lo: f64, hi: f64, a: f64, b: f64) -> impl Fn(f64) -> f64 {
    let span = hi - lo;
    move |v| {
        if span > 0.0 {
            a + (v - lo) / span * (b - a)
        } else {
            (a + b) / 2.0
        }
    }
}

/// First two columns of `points`, one circle per row coloured by `labels`,
/// and a legend entry for each class that actually occurs.
pub fn render_scatter(points: &Matrix<f64>, labels: &[usize], class_names: &[String], axis: &str) -> CliResult<String> {
    let n = points.rows();
    if n == 0 {
        return Err(CliError::Data("nothing to plot: the embedding is empty".into()));
    }
    if points.cols() < 2 {
        return Err(CliError::Data(format!("need 2 embedding columns to plot, found {}", points.cols())));
    }
    if labels.len() != n {
        return Err(CliError::Data(format!("{n} points but {} class tags", labels.len())));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= class_names.len().min(CLASS_COLORS.len())) {
        return Err(CliError::Data(format!("class tag {bad} has no name or colour")));
    }
    if !points.is_finite() {
        return Err(CliError::Numerical("embedding contains non-finite coordinates".into()));
    }

    let bounds = |j: usize| {
        (0..n).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), i| {
            let v = points[(i, j)];
            (lo.min(v), hi.max(v))
        })
    };
    let (x0, x1) = bounds(0);
    let (y0, y1) = bounds(1);
    let plot_right = WIDTH - MARGIN_RIGHT;
    let plot_bottom = HEIGHT - MARGIN_BOTTOM;
    let sx = scaler(x0, x1, MARGIN_LEFT + 10.0, plot_right - 10.0);
    let sy = scaler(y0, y1, plot_bottom - 10.0, MARGIN_TOP + 10.0);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"##
    );
    let _ = writeln!(svg, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);
    let _ = writeln!(
        svg,
        r##"<rect class="frame" x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{}" height="{}" fill="none" stroke="#444444"/>"##,
        plot_right - MARGIN_LEFT,
        plot_bottom - MARGIN_TOP
    );
    let axis = escape(axis);
    let _ = writeln!(
        svg,
        r##"<text class="axis-label" x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="14">{axis} 1</text>"##,
        (MARGIN_LEFT + plot_right) / 2.0,
        HEIGHT - 20.0
    );
    let (ly, lx) = ((MARGIN_TOP + plot_bottom) / 2.0, 25.0);
    let _ = writeln!(
        svg,
        r##"<text class="axis-label" x="{lx}" y="{ly}" text-anchor="middle" font-family="sans-serif" font-size="14" transform="rotate(-90 {lx} {ly})">{axis} 2</text>"##
    );

    let _ = writeln!(svg, r##"<g class="points">"##);
    for (i, &l) in labels.iter().enumerate() {
        let _ = writeln!(
            svg,
            r##"<circle class="point" data-class="{l}" cx="{:.2}" cy="{:.2}" r="3" fill="{}" fill-opacity="0.75"/>"##,
            sx(points[(i, 0)]),
            sy(points[(i, 1)]),
            CLASS_COLORS[l]
        );
    }
    let _ = writeln!(svg, "</g>");

    let _ = writeln!(svg, r##"<g class="legend">"##);
    let present: Vec<usize> = (0..class_names.len()).filter(|c| labels.contains(c)).collect();
    for (row, &c) in present.iter().enumerate() {
        let y = MARGIN_TOP + 15.0 + row as f64 * 22.0;
        let x = plot_right + 15.0;
        let _ = writeln!(
            svg,
            r##"<g class="legend-entry"><circle cx="{x}" cy="{y}" r="5" fill="{}"/><text x="{}" y="{}" font-family="sans-serif" font-size="13">{}</text></g>"##,
            CLASS_COLORS[c],
            x + 12.0,
            y + 4.5,
            escape(&class_names[c])
        );
    }
    let _ = writeln!(svg, "</g>");
    svg.push_str("</svg>\n");
    Ok(svg)
}
