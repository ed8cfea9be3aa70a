use super::output::ABORT_MARKER;
use crate::error::{Error, Result};
use std::fmt::Write as _;
use std::path::Path;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Which columns to draw and how.
#[derive(Clone, Debug, PartialEq)]
pub struct PlotSpec {
    pub x: String,
    pub y: Vec<String>,
    pub log_x: bool,
    pub log_y: bool,
    pub title: String,
    /// Annotate the least-squares slope of the first series in plot coordinates.
    pub slope: bool,
}

impl PlotSpec {
    pub fn new(x: &str, y: &[&str]) -> Self {
        PlotSpec {
            x: x.to_string(),
            y: y.iter().map(|s| s.to_string()).collect(),
            log_x: false,
            log_y: false,
            title: String::new(),
            slope: false,
        }
    }

    pub fn log_log(mut self) -> Self {
        self.log_x = true;
        self.log_y = true;
        self
    }

    pub fn log_y(mut self) -> Self {
        self.log_y = true;
        self
    }

    pub fn log_x(mut self) -> Self {
        self.log_x = true;
        self
    }

    pub fn titled(mut self, t: &str) -> Self {
        self.title = t.to_string();
        self
    }

    pub fn with_slope(mut self) -> Self {
        self.slope = true;
        self
    }
}

/// Reads the named columns of a CSV file; marker rows and empty cells are skipped.
pub fn read_columns(csv_path: &Path, names: &[String]) -> Result<Vec<Vec<Option<f64>>>> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_path(csv_path)?;
    let header = rdr.headers()?.clone();
    let idx: Vec<usize> = names
        .iter()
        .map(|n| header.iter().position(|h| h == n).ok_or_else(|| Error::Csv(format!("missing column '{n}'"))))
        .collect::<Result<_>>()?;
    let mut cols = vec![Vec::new(); names.len()];
    for rec in rdr.records() {
        let rec = rec?;
        if rec.get(0).is_some_and(|f| f.starts_with(ABORT_MARKER)) {
            continue;
        }
        for (c, &i) in idx.iter().enumerate() {
            cols[c].push(rec.get(i).and_then(|f| f.trim().parse::<f64>().ok()));
        }
    }
    Ok(cols)
}

/// Renders `spec` from `csv_path` into a self-contained SVG at `svg_path`.
/// Nothing is written when a column is missing or there is nothing to draw.
pub fn emit_plot(csv_path: &Path, spec: &PlotSpec, svg_path: &Path) -> Result<()> {
    let svg = render_plot(csv_path, spec)?;
    if let Some(dir) = svg_path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(svg_path, svg)?;
    Ok(())
}

pub fn render_plot(csv_path: &Path, spec: &PlotSpec) -> Result<String> {
    if spec.y.is_empty() {
        return Err(Error::InvalidParameter("plot needs at least one y column".into()));
    }
    let mut names = vec![spec.x.clone()];
    names.extend(spec.y.iter().cloned());
    let cols = read_columns(csv_path, &names)?;
    if cols[0].is_empty() {
        return Err(Error::Csv(format!("{} has no data rows", csv_path.display())));
    }
    let tx = |v: f64| if spec.log_x { v.log10() } else { v };
    let ty = |v: f64| if spec.log_y { v.log10() } else { v };
    let ok_x = |v: f64| v.is_finite() && (!spec.log_x || v > 0.0);
    let ok_y = |v: f64| v.is_finite() && (!spec.log_y || v > 0.0);
    let series: Vec<Vec<(f64, f64)>> = (1..cols.len())
        .map(|c| {
            let mut pts: Vec<(f64, f64)> = cols[0]
                .iter()
                .zip(&cols[c])
                .filter_map(|(x, y)| match (x, y) {
                    (Some(x), Some(y)) if ok_x(*x) && ok_y(*y) => Some((tx(*x), ty(*y))),
                    _ => None,
                })
                .collect();
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            pts
        })
        .collect();
    let all: Vec<(f64, f64)> = series.iter().flatten().copied().collect();
    if all.is_empty() {
        return Err(Error::Csv("no drawable points".into()));
    }
    let (x0, x1) = padded_range(all.iter().map(|p| p.0));
    let (y0, y1) = padded_range(all.iter().map(|p| p.1));
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + ph - (y - y0) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for (v, label) in ticks(x0, x1, spec.log_x) {
        let x = sx(v);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            TOP + ph,
            TOP + ph + 5.0,
            TOP + ph + 18.0,
            escape(&label)
        );
    }
    for (v, label) in ticks(y0, y1, spec.log_y) {
        let y = sy(v);
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 5.0,
            LEFT - 8.0,
            y + 4.0,
            escape(&label)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + 0.5 * pw,
        HEIGHT - 10.0,
        escape(&axis_label(&spec.x, spec.log_x))
    );
    if !spec.title.is_empty() {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
            LEFT + 0.5 * pw,
            escape(&spec.title)
        );
    }
    for (k, pts) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        if pts.len() > 1 {
            let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
            let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}"/>"#, path.join(" "));
        }
        for &(x, y) in pts {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, sx(x), sy(y));
        }
        let ly = TOP + 12.0 + 18.0 * k as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            WIDTH - RIGHT + 10.0,
            WIDTH - RIGHT + 30.0,
            WIDTH - RIGHT + 35.0,
            ly + 4.0,
            escape(&axis_label(&spec.y[k], spec.log_y))
        );
    }
    if spec.slope {
        if let Some(m) = slope(&series[0]) {
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}">slope {m:.4}</text>"#,
                LEFT + 10.0,
                TOP + 18.0
            );
        }
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn axis_label(name: &str, log: bool) -> String {
    if log {
        format!("log10 {name}")
    } else {
        name.to_string()
    }
}

fn padded_range(v: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = v.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    let pad = if hi > lo { 0.05 * (hi - lo) } else { 0.5 * lo.abs().max(1.0) };
    (lo - pad, hi + pad)
}

// Five evenly spaced ticks, or integer decades on log axes when there are at least two.
fn ticks(lo: f64, hi: f64, log: bool) -> Vec<(f64, String)> {
    if log {
        let decades: Vec<f64> = (lo.ceil() as i64..=hi.floor() as i64).map(|k| k as f64).collect();
        if decades.len() >= 2 {
            return decades.into_iter().map(|k| (k, format!("1e{k}"))).collect();
        }
    }
    (0..5)
        .map(|i| {
            let v = lo + (hi - lo) * i as f64 / 4.0;
            let label = if log { format!("{:.3e}", 10f64.powf(v)) } else { format!("{v:.3}") };
            (v, label)
        })
        .collect()
}

fn slope(pts: &[(f64, f64)]) -> Option<f64> {
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return None;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}
