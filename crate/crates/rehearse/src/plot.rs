//! Self-contained SVG line charts of metrics columns against step.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{HarnessError, Result};
use crate::metrics::{read_metrics_csv, MetricsRow, HEADER};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const TICKS: usize = 5;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub rows: Vec<MetricsRow>,
}

#[derive(Debug, Clone)]
pub struct PlotOptions {
    pub column: String,
    pub title: Option<String>,
}

impl Default for PlotOptions {
    fn default() -> Self {
        Self {
            column: "test_acc".into(),
            title: None,
        }
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Axis range; accuracy columns are pinned to [0, 1].
fn y_range(column: &str, values: impl Iterator<Item = f64>) -> (f64, f64) {
    if column.ends_with("_acc") {
        return (0.0, 1.0);
    }
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let lo = lo.min(0.0);
    if hi <= lo {
        (lo, lo + 1.0)
    } else {
        (lo, hi * 1.05)
    }
}

fn tick_label(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e9 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

pub fn render_svg(series: &[Series], opts: &PlotOptions) -> Result<String> {
    if series.is_empty() {
        return Err(HarnessError::Usage("plot needs at least one series".into()));
    }
    let column = opts.column.as_str();
    if column == "step" || !HEADER.contains(&column) {
        return Err(HarnessError::Usage(format!(
            "unknown column {column:?}; choose one of {}",
            HEADER[1..].join(", ")
        )));
    }
    let points = |s: &Series| -> Vec<(f64, f64)> {
        s.rows
            .iter()
            .map(|r| (r.step as f64, r.column(column).expect("known column")))
            .collect()
    };
    let all: Vec<(f64, f64)> = series.iter().flat_map(points).collect();
    let x_lo = all.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let x_hi = all.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let (x_lo, x_hi) = if !x_lo.is_finite() {
        (0.0, 1.0)
    } else if x_hi <= x_lo {
        (x_lo - 0.5, x_hi + 0.5)
    } else {
        (x_lo.min(0.0), x_hi)
    };
    let (y_lo, y_hi) = y_range(column, all.iter().map(|p| p.1));

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w;
    let sy = |y: f64| TOP + plot_h - (y - y_lo) / (y_hi - y_lo) * plot_h;

    let mut svg = String::new();
    let w = &mut svg;
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(w, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    if let Some(title) = &opts.title {
        let _ = writeln!(
            w,
            r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
            LEFT + plot_w / 2.0,
            escape(title)
        );
    }

    // Axes, ticks and grid.
    let (x0, y0, x1, y1) = (LEFT, TOP + plot_h, LEFT + plot_w, TOP);
    let _ = writeln!(w, r#"<line x1="{x0:.1}" y1="{y0:.1}" x2="{x1:.1}" y2="{y0:.1}" stroke="black"/>"#);
    let _ = writeln!(w, r#"<line x1="{x0:.1}" y1="{y0:.1}" x2="{x0:.1}" y2="{y1:.1}" stroke="black"/>"#);
    for t in 0..=TICKS {
        let f = t as f64 / TICKS as f64;
        let xv = x_lo + f * (x_hi - x_lo);
        let yv = y_lo + f * (y_hi - y_lo);
        let (px, py) = (sx(xv), sy(yv));
        let _ = writeln!(w, r#"<line x1="{px:.1}" y1="{y0:.1}" x2="{px:.1}" y2="{:.1}" stroke="black"/>"#, y0 + 5.0);
        let _ = writeln!(
            w,
            r#"<text x="{px:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            y0 + 18.0,
            tick_label(xv)
        );
        let _ = writeln!(w, r##"<line x1="{x0:.1}" y1="{py:.1}" x2="{x1:.1}" y2="{py:.1}" stroke="#dddddd"/>"##);
        let _ = writeln!(
            w,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            x0 - 8.0,
            py + 4.0,
            tick_label(yv)
        );
    }
    let _ = writeln!(
        w,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">step</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 16.0
    );
    let _ = writeln!(
        w,
        r#"<text x="18" y="{:.1}" text-anchor="middle" transform="rotate(-90 18 {:.1})">{}</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0,
        escape(column)
    );

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let coords: Vec<String> = points(s)
            .into_iter()
            .map(|(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            w,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            coords.join(" ")
        );
        let ly = TOP + 10.0 + 20.0 * i as f64;
        let lx = LEFT + plot_w + 15.0;
        let _ = writeln!(
            w,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="3"/>"#,
            lx + 20.0
        );
        let _ = writeln!(w, r#"<text x="{:.1}" y="{:.1}">{}</text>"#, lx + 26.0, ly + 4.0, escape(&s.label));
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Plot `column` of every CSV into one chart. Labels default to the CSV's
/// parent directory name.
pub fn render_plot_svg(csv_paths: &[&Path], labels: &[String], opts: &PlotOptions, out: &Path) -> Result<()> {
    if !labels.is_empty() && labels.len() != csv_paths.len() {
        return Err(HarnessError::Usage(format!(
            "{} labels for {} series",
            labels.len(),
            csv_paths.len()
        )));
    }
    let mut series = Vec::with_capacity(csv_paths.len());
    for (i, path) in csv_paths.iter().enumerate() {
        let label = labels.get(i).cloned().unwrap_or_else(|| default_label(path));
        series.push(Series {
            label,
            rows: read_metrics_csv(path)?,
        });
    }
    let svg = render_svg(&series, opts)?;
    std::fs::write(out, svg).map_err(|e| HarnessError::io(out, e))
}

fn default_label(path: &Path) -> String {
    path.parent()
        .and_then(Path::file_name)
        .or_else(|| path.file_stem())
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(step: usize, acc: f64) -> MetricsRow {
        MetricsRow {
            step,
            train_acc: acc,
            test_acc: acc,
            rehearsed_mean: 3.0 * step as f64,
            rehearsed_min: 0,
            rehearsed_max: 0,
            fit_steps_total: 0,
        }
    }

    #[test]
    fn single_series_two_points() {
        let s = Series {
            label: "a<b".into(),
            rows: vec![row(1, 0.5), row(2, 0.75)],
        };
        let svg = render_svg(&[s], &PlotOptions::default()).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 1);
        let start = svg.find("points=\"").unwrap() + 8;
        let pts = &svg[start..start + svg[start..].find('"').unwrap()];
        assert_eq!(pts.split(' ').count(), 2);
        assert!(pts.split(' ').all(|p| p.split(',').count() == 2));
        assert!(svg.contains("a&lt;b"));
        assert!(svg.contains(">step<") && svg.contains(">test_acc<"));
        assert!(!svg.contains("href"));
    }

    #[test]
    fn one_polyline_per_series() {
        let mk = |l: &str| Series {
            label: l.into(),
            rows: vec![row(10, 0.1), row(20, 0.2), row(30, 0.9)],
        };
        let opts = PlotOptions {
            column: "rehearsed_mean".into(),
            title: Some("t".into()),
        };
        let svg = render_svg(&[mk("x"), mk("y"), mk("z")], &opts).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 3);
    }

    #[test]
    fn rejects_unknown_column_and_empty_input() {
        let s = Series {
            label: "a".into(),
            rows: vec![row(1, 0.5)],
        };
        let opts = PlotOptions {
            column: "nope".into(),
            title: None,
        };
        assert!(matches!(render_svg(&[s], &opts), Err(HarnessError::Usage(_))));
        assert!(render_svg(&[], &PlotOptions::default()).is_err());
    }

    #[test]
    fn header_only_series_still_renders() {
        let s = Series {
            label: "empty".into(),
            rows: vec![],
        };
        let svg = render_svg(&[s], &PlotOptions::default()).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 1);
    }
}
