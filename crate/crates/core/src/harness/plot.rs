//! Minimal SVG charts for experiment tables. Each chart is written next to a
//! `series,x,y` CSV of the plotted points.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlotKind {
    Line,
    Scatter,
}

impl FromStr for PlotKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "line" => Ok(PlotKind::Line),
            "scatter" => Ok(PlotKind::Scatter),
            other => Err(Error::Config(format!("unknown plot kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotPoint {
    pub series: String,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlotTable {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub points: Vec<PlotPoint>,
}

impl PlotTable {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Self { title: title.into(), x_label: x_label.into(), y_label: y_label.into(), ..Self::default() }
    }

    pub fn push(&mut self, series: &str, x: f64, y: f64) {
        self.points.push(PlotPoint { series: series.into(), x, y });
    }

    fn series(&self) -> Vec<&str> {
        let mut names: Vec<&str> = Vec::new();
        for p in &self.points {
            if !names.contains(&p.series.as_str()) {
                names.push(&p.series);
            }
        }
        names
    }
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

/// Writes `path` (SVG) and `path` with a `.csv` extension.
pub fn emit_plot(table: &PlotTable, kind: PlotKind, path: &Path) -> Result<()> {
    let finite: Vec<&PlotPoint> = table.points.iter().filter(|p| p.x.is_finite() && p.y.is_finite()).collect();
    if finite.is_empty() {
        return Err(Error::EmptyTable);
    }
    let mut w = csv::Writer::from_path(path.with_extension("csv"))?;
    for p in &table.points {
        w.serialize(p)?;
    }
    w.flush()?;
    fs::write(path, render_svg(table, kind, &finite))?;
    Ok(())
}

fn render_svg(table: &PlotTable, kind: PlotKind, points: &[&PlotPoint]) -> String {
    let tx = |x: f64| if table.log_x && x > 0.0 { x.log10() } else { x };
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in points {
        x0 = x0.min(tx(p.x));
        x1 = x1.max(tx(p.x));
        y0 = y0.min(p.y);
        y1 = y1.max(p.y);
    }
    if x1 - x0 < 1e-12 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if y1 - y0 < 1e-12 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let sx = |x: f64| MARGIN + (tx(x) - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, escape(&table.title));
    let (l, r, t, b) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(s, r#"<polyline points="{l},{t} {l},{b} {r},{b}" fill="none" stroke="black"/>"#);
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let yv = y0 + f * (y1 - y0);
        let xv = x0 + f * (x1 - x0);
        let xl = if table.log_x { 10f64.powf(xv) } else { xv };
        let py = b - f * (b - t);
        let px = l + f * (r - l);
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, l - 6.0, py + 4.0, fmt_tick(yv));
        let _ = writeln!(s, r#"<text x="{px}" y="{}" text-anchor="middle">{}</text>"#, b + 16.0, fmt_tick(xl));
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, WIDTH / 2.0, HEIGHT - 16.0, escape(&table.x_label));
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(&table.y_label)
    );
    for (k, name) in table.series().into_iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let mut pts: Vec<&&PlotPoint> = points.iter().filter(|p| p.series == name).collect();
        if kind == PlotKind::Line {
            pts.sort_by(|a, b| a.x.total_cmp(&b.x));
            let path: Vec<String> = pts.iter().map(|p| format!("{:.2},{:.2}", sx(p.x), sy(p.y))).collect();
            let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, path.join(" "));
        }
        for p in &pts {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#, sx(p.x), sy(p.y));
        }
        let ly = t + 4.0 + 16.0 * k as f64;
        let _ = writeln!(s, r#"<rect x="{}" y="{}" width="10" height="10" fill="{color}"/>"#, r - 120.0, ly - 9.0);
        let _ = writeln!(s, r#"<text x="{}" y="{ly}">{}</text>"#, r - 105.0, escape(name));
    }
    s.push_str("</svg>\n");
    s
}

fn fmt_tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.1e}")
    } else {
        format!("{v:.3}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn writes_svg_and_csv() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sweep.svg");
        let mut t = PlotTable::new("ratio vs n", "n", "ratio");
        t.log_x = true;
        for (n, y) in [(10.0, 0.8), (100.0, 0.9), (1000.0, 0.95)] {
            t.push("changing_spend", n, y);
            t.push("truthful", n, 0.5);
        }
        emit_plot(&t, PlotKind::Line, &path).unwrap();
        let svg = fs::read_to_string(&path).unwrap();
        assert!(svg.starts_with("<svg") && svg.contains("polyline") && svg.contains("truthful"));
        let csv = fs::read_to_string(path.with_extension("csv")).unwrap();
        assert!(csv.starts_with("series,x,y\n"));
        assert_eq!(csv.lines().count(), 7);
    }

    #[test]
    fn empty_table_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let t = PlotTable::new("", "", "");
        assert!(matches!(emit_plot(&t, PlotKind::Scatter, &dir.path().join("x.svg")), Err(Error::EmptyTable)));
    }
}
