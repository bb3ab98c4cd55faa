//! Standalone SVG charts.

use std::fmt::Write as _;
use std::path::Path;

use super::format::format_sig;
use crate::error::{Error, Result};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];

#[derive(Debug, Clone, PartialEq)]
pub struct BarSeries {
    pub label: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ChartData {
    /// Mean episode reward per generation.
    RewardCurve { points: Vec<(f64, f64)> },
    /// ζ per n (categories), one bar per series in each group. Y axis is fixed to [0, 1].
    ZetaBars {
        categories: Vec<String>,
        series: Vec<BarSeries>,
    },
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        let span = if self.x1 > self.x0 { self.x1 - self.x0 } else { 1.0 };
        LEFT + (x - self.x0) / span * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        let span = if self.y1 > self.y0 { self.y1 - self.y0 } else { 1.0 };
        HEIGHT - BOTTOM - (y - self.y0) / span * (HEIGHT - TOP - BOTTOM)
    }
}

fn header(svg: &mut String, title: &str, x_label: &str, y_label: &str) {
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="15">{title}</text>"#,
        WIDTH / 2.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{x_label}</text>"#,
        LEFT + (WIDTH - LEFT - RIGHT) / 2.0,
        HEIGHT - 15.0
    );
    let cy = TOP + (HEIGHT - TOP - BOTTOM) / 2.0;
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{cy:.1}" text-anchor="middle" transform="rotate(-90 18 {cy:.1})">{y_label}</text>"#
    );
}

fn axes(svg: &mut String, frame: &Frame, x_ticks: bool) {
    let (bx, by) = (LEFT, HEIGHT - BOTTOM);
    let _ = writeln!(
        svg,
        r#"<g id="axes" stroke="black"><line x1="{bx}" y1="{by}" x2="{:.1}" y2="{by}"/><line x1="{bx}" y1="{by}" x2="{bx}" y2="{TOP}"/></g>"#,
        WIDTH - RIGHT
    );
    for k in 0..=4 {
        let v = frame.y0 + (frame.y1 - frame.y0) * f64::from(k) / 4.0;
        let y = frame.py(v);
        let _ = writeln!(
            svg,
            r#"<line x1="{:.1}" y1="{y:.2}" x2="{bx}" y2="{y:.2}" stroke="black"/><text x="{:.1}" y="{:.2}" text-anchor="end">{}</text>"#,
            bx - 4.0,
            bx - 6.0,
            y + 4.0,
            format_sig(v, 4)
        );
        if x_ticks {
            let xv = frame.x0 + (frame.x1 - frame.x0) * f64::from(k) / 4.0;
            let x = frame.px(xv);
            let _ = writeln!(
                svg,
                r#"<line x1="{x:.2}" y1="{by}" x2="{x:.2}" y2="{:.1}" stroke="black"/><text x="{x:.2}" y="{:.1}" text-anchor="middle">{}</text>"#,
                by + 4.0,
                by + 18.0,
                format_sig(xv, 4)
            );
        }
    }
}

fn reward_curve(points: &[(f64, f64)]) -> String {
    let mut svg = String::new();
    header(&mut svg, "Mean episode reward per generation", "generation", "mean episode reward");
    let finite: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .collect();
    let (mut x0, mut x1, mut y0, mut y1) = (0.0, 1.0, 0.0, 1.0);
    if let Some(&(x, y)) = finite.first() {
        (x0, x1, y0, y1) = (x, x, y, y);
        for &(x, y) in &finite {
            x0 = f64::min(x0, x);
            x1 = f64::max(x1, x);
            y0 = f64::min(y0, y);
            y1 = f64::max(y1, y);
        }
        if y1 == y0 {
            y0 -= 0.5;
            y1 += 0.5;
        }
    }
    let frame = Frame { x0, x1, y0, y1 };
    axes(&mut svg, &frame, true);
    if !finite.is_empty() {
        let coords: Vec<String> = finite
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", frame.px(x), frame.py(y)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
            PALETTE[0],
            coords.join(" ")
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn zeta_bars(categories: &[String], series: &[BarSeries]) -> String {
    let mut svg = String::new();
    header(&mut svg, "Stubbornness \u{3b6}(n, d)", "n (turns of disagreement)", "\u{3b6}");
    let frame = Frame {
        x0: 0.0,
        x1: 1.0,
        y0: 0.0,
        y1: 1.0,
    };
    axes(&mut svg, &frame, false);
    let plot_w = WIDTH - LEFT - RIGHT;
    let group_w = if categories.is_empty() { plot_w } else { plot_w / categories.len() as f64 };
    let bar_w = group_w * 0.8 / series.len().max(1) as f64;
    for (c, cat) in categories.iter().enumerate() {
        let gx = LEFT + group_w * c as f64;
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.1}" text-anchor="middle">{cat}</text>"#,
            gx + group_w / 2.0,
            HEIGHT - BOTTOM + 18.0
        );
        for (s, ser) in series.iter().enumerate() {
            let Some(&v) = ser.values.get(c) else { continue };
            if !v.is_finite() {
                continue;
            }
            let top = frame.py(v.clamp(0.0, 1.0));
            let _ = writeln!(
                svg,
                r#"<rect x="{:.2}" y="{top:.2}" width="{bar_w:.2}" height="{:.2}" fill="{}"/>"#,
                gx + group_w * 0.1 + bar_w * s as f64,
                HEIGHT - BOTTOM - top,
                PALETTE[s % PALETTE.len()]
            );
        }
    }
    for (s, ser) in series.iter().enumerate() {
        let y = TOP + 14.0 * s as f64;
        let _ = writeln!(
            svg,
            r#"<rect x="{:.1}" y="{:.1}" width="10" height="10" fill="{}"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            WIDTH - RIGHT - 120.0,
            y - 9.0,
            PALETTE[s % PALETTE.len()],
            WIDTH - RIGHT - 105.0,
            y,
            ser.label
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// SVG text for `data`; a pure function of its input.
pub fn render_svg(data: &ChartData) -> String {
    match data {
        ChartData::RewardCurve { points } => reward_curve(points),
        ChartData::ZetaBars { categories, series } => zeta_bars(categories, series),
    }
}

pub fn render_chart(data: &ChartData, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, render_svg(data)).map_err(|e| Error::io(path, e))
}
