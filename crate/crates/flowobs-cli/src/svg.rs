//! Self-contained SVG line charts.
//!
//! Presentation only: truth series are drawn dash-dot, estimates solid,
//! raw measurements dotted. No external renderer involved.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};

#[derive(Debug, Clone, Copy)]
pub enum LineStyle {
    Solid,
    DashDot,
    Dot,
}

impl LineStyle {
    fn dash_array(self) -> &'static str {
        match self {
            LineStyle::Solid => "none",
            LineStyle::DashDot => "10 4 2 4",
            LineStyle::Dot => "2 5",
        }
    }
}

pub struct Series<'a> {
    pub label: &'a str,
    pub points: &'a [(f64, f64)],
    pub style: LineStyle,
    pub color: &'a str,
}

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 480.0;
const MARGIN_L: f64 = 78.0;
const MARGIN_R: f64 = 24.0;
const MARGIN_T: f64 = 44.0;
const MARGIN_B: f64 = 58.0;

/// Writes a line chart of the given series to `path`.
pub fn line_chart(
    path: &Path,
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[Series<'_>],
) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);

    let (mut x_min, mut x_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_min, mut y_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for s in series {
        for &(x, y) in s.points {
            if x.is_finite() && y.is_finite() {
                x_min = x_min.min(x);
                x_max = x_max.max(x);
                y_min = y_min.min(y);
                y_max = y_max.max(y);
            }
        }
    }
    if !x_min.is_finite() || !x_max.is_finite() {
        x_min = 0.0;
        x_max = 1.0;
    }
    if !y_min.is_finite() || !y_max.is_finite() {
        y_min = 0.0;
        y_max = 1.0;
    }
    if (x_max - x_min).abs() < 1e-300 {
        x_max = x_min + 1.0;
    }
    if (y_max - y_min).abs() < 1e-300 {
        let pad = y_min.abs().max(1.0) * 0.05;
        y_min -= pad;
        y_max += pad;
    } else {
        let pad = (y_max - y_min) * 0.05;
        y_min -= pad;
        y_max += pad;
    }

    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let to_x = |x: f64| MARGIN_L + (x - x_min) / (x_max - x_min) * plot_w;
    let to_y = |y: f64| MARGIN_T + (1.0 - (y - y_min) / (y_max - y_min)) * plot_h;

    writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    )?;
    writeln!(w, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#)?;
    writeln!(
        w,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    )?;

    // Axes and ticks.
    writeln!(
        w,
        r#"<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black" stroke-width="1"/>"#
    )?;
    let n_ticks = 6;
    for k in 0..n_ticks {
        let fx = k as f64 / (n_ticks - 1) as f64;
        let xv = x_min + fx * (x_max - x_min);
        let xp = to_x(xv);
        writeln!(
            w,
            r#"<line x1="{xp}" y1="{}" x2="{xp}" y2="{}" stroke="black" stroke-width="1"/>"#,
            MARGIN_T + plot_h,
            MARGIN_T + plot_h + 5.0
        )?;
        writeln!(
            w,
            r#"<text x="{xp}" y="{}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"#,
            MARGIN_T + plot_h + 20.0,
            tick_label(xv)
        )?;
        let yv = y_min + fx * (y_max - y_min);
        let yp = to_y(yv);
        writeln!(
            w,
            r#"<line x1="{}" y1="{yp}" x2="{MARGIN_L}" y2="{yp}" stroke="black" stroke-width="1"/>"#,
            MARGIN_L - 5.0
        )?;
        writeln!(
            w,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="end">{}</text>"#,
            MARGIN_L - 9.0,
            yp + 4.0,
            tick_label(yv)
        )?;
        writeln!(
            w,
            r#"<line x1="{MARGIN_L}" y1="{yp}" x2="{}" y2="{yp}" stroke="#dddddd" stroke-width="0.5"/>"#,
            MARGIN_L + plot_w
        )?;
    }
    writeln!(
        w,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="13" text-anchor="middle">{}</text>"#,
        MARGIN_L + plot_w / 2.0,
        HEIGHT - 16.0,
        escape(x_label)
    )?;
    writeln!(
        w,
        r#"<text x="18" y="{}" font-family="sans-serif" font-size="13" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#,
        MARGIN_T + plot_h / 2.0,
        MARGIN_T + plot_h / 2.0,
        escape(y_label)
    )?;

    // Series.
    for s in series {
        let mut d = String::new();
        for (i, &(x, y)) in s.points.iter().enumerate() {
            if !x.is_finite() || !y.is_finite() {
                continue;
            }
            let cmd = if i == 0 { 'M' } else { 'L' };
            d.push_str(&format!("{cmd}{:.2} {:.2} ", to_x(x), to_y(y)));
        }
        writeln!(
            w,
            r#"<path d="{d}" fill="none" stroke="{}" stroke-width="1.6" stroke-dasharray="{}"/>"#,
            s.color,
            s.style.dash_array()
        )?;
    }

    // Legend.
    let mut ly = MARGIN_T + 14.0;
    for s in series {
        let lx = MARGIN_L + plot_w - 180.0;
        writeln!(
            w,
            r#"<line x1="{lx}" y1="{}" x2="{}" y2="{}" stroke="{}" stroke-width="1.6" stroke-dasharray="{}"/>"#,
            ly - 4.0,
            lx + 28.0,
            ly - 4.0,
            s.color,
            s.style.dash_array()
        )?;
        writeln!(
            w,
            r#"<text x="{}" y="{ly}" font-family="sans-serif" font-size="12">{}</text>"#,
            lx + 34.0,
            escape(s.label)
        )?;
        ly += 18.0;
    }
    writeln!(w, "</svg>")?;
    Ok(())
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if a >= 1e4 || a < 1e-3 {
        format!("{v:.2e}")
    } else {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn emits_well_formed_svg() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("chart.svg");
        let pts: Vec<(f64, f64)> = (0..100).map(|k| (k as f64, (k as f64 * 0.1).sin())).collect();
        line_chart(
            &path,
            "demo",
            "time (min)",
            "value",
            &[
                Series {
                    label: "truth",
                    points: &pts,
                    style: LineStyle::DashDot,
                    color: "#1f77b4",
                },
                Series {
                    label: "estimate",
                    points: &pts,
                    style: LineStyle::Solid,
                    color: "#d62728",
                },
            ],
        )
        .unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("<svg"));
        assert!(text.trim_end().ends_with("</svg>"));
        assert!(text.contains("truth"));
    }

    #[test]
    fn handles_constant_series() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("flat.svg");
        let pts = [(0.0, 2.2), (1.0, 2.2)];
        line_chart(
            &path,
            "flat",
            "x",
            "y",
            &[Series {
                label: "flat",
                points: &pts,
                style: LineStyle::Solid,
                color: "black",
            }],
        )
        .unwrap();
        assert!(path.exists());
    }
}
