use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{MethodCurve, MetricsTable};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ReportFiles {
    pub csv: PathBuf,
    pub svg: PathBuf,
}

#[derive(Serialize, Deserialize)]
struct Row {
    t: f64,
    method: String,
    mean: f64,
    stderr: f64,
}

/// Writes `metrics.csv` (`t,method,mean,stderr`) and `organic.svg` into `dir`.
pub fn export_report(table: &MetricsTable, dir: impl AsRef<Path>) -> Result<ReportFiles> {
    if table.curves.is_empty() {
        return Err(Error::Config("report needs at least one method".into()));
    }
    if let Some(c) =
        table.curves.iter().find(|c| c.mean.len() != table.grid.len() || c.stderr.len() != table.grid.len())
    {
        return Err(Error::Config(format!("curve '{}' does not match the time grid", c.method)));
    }
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let csv_path = dir.join("metrics.csv");
    let mut w = csv::Writer::from_path(&csv_path)?;
    for c in &table.curves {
        for (k, t) in table.grid.iter().enumerate() {
            w.serialize(Row { t: *t, method: c.method.clone(), mean: c.mean[k], stderr: c.stderr[k] })?;
        }
    }
    w.flush()?;
    let svg_path = dir.join("organic.svg");
    std::fs::write(&svg_path, render_svg(table))?;
    Ok(ReportFiles { csv: csv_path, svg: svg_path })
}

/// Reads back the curves of a `metrics.csv`; summaries are left empty.
pub fn read_metrics_csv(path: impl AsRef<Path>) -> Result<MetricsTable> {
    let mut r = csv::Reader::from_path(path)?;
    let mut grid: Vec<f64> = Vec::new();
    let mut curves: Vec<MethodCurve> = Vec::new();
    for row in r.deserialize() {
        let row: Row = row?;
        let idx = match curves.iter().position(|c| c.method == row.method) {
            Some(i) => i,
            None => {
                curves.push(MethodCurve { method: row.method.clone(), mean: Vec::new(), stderr: Vec::new() });
                curves.len() - 1
            }
        };
        let curve = &mut curves[idx];
        let k = curve.mean.len();
        if idx == 0 {
            grid.push(row.t);
        } else if grid.get(k) != Some(&row.t) {
            return Err(Error::Parse(format!("method '{}' uses a different time grid", row.method)));
        }
        curve.mean.push(row.mean);
        curve.stderr.push(row.stderr);
    }
    if let Some(c) = curves.iter().find(|c| c.mean.len() != grid.len()) {
        return Err(Error::Parse(format!(
            "method '{}' has {} points, expected {}",
            c.method,
            c.mean.len(),
            grid.len()
        )));
    }
    Ok(MetricsTable { grid, curves, summaries: Vec::new() })
}

const PALETTE: [&str; 6] = ["#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02"];
const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 20.0;
const BOTTOM: f64 = 50.0;

/// Line chart of `N̄(t)` per method with ±1 standard-error bands.
pub fn render_svg(table: &MetricsTable) -> String {
    let (t_lo, t_hi) = match (table.grid.first(), table.grid.last()) {
        (Some(a), Some(b)) if b > a => (*a, *b),
        (Some(a), _) => (*a, *a + 1.0),
        _ => (0.0, 1.0),
    };
    let y_hi = table
        .curves
        .iter()
        .flat_map(|c| c.mean.iter().zip(&c.stderr).map(|(m, s)| m + s))
        .fold(0.0f64, f64::max)
        .max(1.0)
        * 1.05;
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let x = |t: f64| LEFT + (t - t_lo) / (t_hi - t_lo) * plot_w;
    let y = |v: f64| TOP + plot_h - v.max(0.0) / y_hi * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let (x0, y0) = (LEFT, TOP + plot_h);
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{}" y2="{y0}" stroke="black"/>"#, LEFT + plot_w);
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{TOP}" x2="{x0}" y2="{y0}" stroke="black"/>"#);
    for i in 0..=4 {
        let t = t_lo + (t_hi - t_lo) * i as f64 / 4.0;
        let v = y_hi * i as f64 / 4.0;
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, x(t), y0 + 18.0, tick(t));
        let _ =
            writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 6.0, y(v) + 4.0, tick(v));
    }
    let _ =
        writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">t</text>"#, LEFT + plot_w / 2.0, HEIGHT - 10.0);
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">organic actions</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    for (i, c) in table.curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let upper = table.grid.iter().zip(c.mean.iter().zip(&c.stderr)).map(|(t, (m, e))| (x(*t), y(m + e)));
        let lower = table.grid.iter().zip(c.mean.iter().zip(&c.stderr)).rev().map(|(t, (m, e))| (x(*t), y(m - e)));
        let band: Vec<String> = upper.chain(lower).map(|(a, b)| format!("{a:.2},{b:.2}")).collect();
        let _ =
            writeln!(s, r#"<polygon points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#, band.join(" "));
        let line: Vec<String> =
            table.grid.iter().zip(&c.mean).map(|(t, m)| format!("{:.2},{:.2}", x(*t), y(*m))).collect();
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#, line.join(" "));
        let ly = TOP + 10.0 + 20.0 * i as f64;
        let lx = LEFT + plot_w + 15.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
            lx + 20.0
        );
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, lx + 26.0, ly + 4.0, escape(&c.method));
    }
    s.push_str("</svg>\n");
    s
}

fn tick(v: f64) -> String {
    if v.abs() >= 1000.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
