//! Minimal SVG line and scatter plots of CSV columns.
//!
//! Output is a pure function of the CSV contents and the [`PlotSpec`], which
//! keeps plots diffable in golden-file tests.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum PlotKind {
    #[default]
    Line,
    Scatter,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlotSpec {
    pub x: String,
    /// One series per column.
    pub y: Vec<String>,
    pub logx: bool,
    pub logy: bool,
    pub kind: PlotKind,
    pub title: Option<String>,
}

/// Columns of a CSV file parsed as floats; unparsable cells become NaN.
#[derive(Clone, Debug)]
pub struct Columns {
    pub names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Columns {
    pub fn parse(bytes: &[u8]) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(bytes);
        let names: Vec<String> = rdr.headers().context("reading csv header")?.iter().map(str::to_string).collect();
        if names.is_empty() || names.iter().all(|n| n.is_empty()) {
            bail!("csv is empty");
        }
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            rows.push(rec.iter().map(|c| c.trim().parse::<f64>().unwrap_or(f64::NAN)).collect());
        }
        if rows.is_empty() {
            bail!("csv has a header but no rows");
        }
        Ok(Self { names, rows })
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let idx = self
            .names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| anyhow!("csv has no column `{name}` (columns: {})", self.names.join(", ")))?;
        Ok(self.rows.iter().map(|r| r.get(idx).copied().unwrap_or(f64::NAN)).collect())
    }
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Result<Self> {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            let v = if log { v.log10() } else { v };
            if v.is_finite() {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        if !lo.is_finite() {
            bail!("no plottable values{}", if log { " (log axis needs positive data)" } else { "" });
        }
        if hi - lo < 1e-12 * (1.0 + lo.abs()) {
            lo -= 0.5;
            hi += 0.5;
        }
        Ok(Self { lo, hi, log })
    }

    fn coord(&self, v: f64) -> Option<f64> {
        let v = if self.log { v.log10() } else { v };
        v.is_finite().then(|| (v - self.lo) / (self.hi - self.lo))
    }

    /// Tick positions in data units and their labels.
    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log {
            let (a, b) = ((self.lo - 1e-9).ceil() as i32, (self.hi + 1e-9).floor() as i32);
            let step = ((b - a) / 8 + 1).max(1);
            (a..=b).step_by(step as usize).map(|e| (10f64.powi(e), format!("1e{e}"))).collect()
        } else {
            let raw = (self.hi - self.lo) / 5.0;
            let mag = 10f64.powf(raw.log10().floor());
            let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
            let first = (self.lo / step - 1e-9).ceil() as i64;
            let last = (self.hi / step + 1e-9).floor() as i64;
            (first..=last).map(|k| k as f64 * step).map(|v| (v, format!("{}", tidy(v)))).collect()
        }
    }
}

fn tidy(v: f64) -> f64 {
    (v * 1e10).round() / 1e10
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Render `spec` over `data` as an SVG document.
pub fn render_svg(data: &Columns, spec: &PlotSpec) -> Result<String> {
    if spec.y.is_empty() {
        bail!("no y column given");
    }
    let xs = data.column(&spec.x)?;
    let series: Vec<(String, Vec<f64>)> =
        spec.y.iter().map(|name| Ok((name.clone(), data.column(name)?))).collect::<Result<_>>()?;
    let xa = Axis::fit(xs.iter().copied(), spec.logx)?;
    let ya = Axis::fit(series.iter().flat_map(|(_, ys)| ys.iter().copied()), spec.logy)?;

    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let px = |u: f64| LEFT + u * pw;
    let py = |v: f64| TOP + (1.0 - v) * ph;

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    )?;
    writeln!(s, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#)?;
    if let Some(t) = &spec.title {
        writeln!(s, r#"<text x="{:.2}" y="18" text-anchor="middle" font-size="13">{}</text>"#, WIDTH / 2.0, escape(t))?;
    }
    writeln!(s, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#)?;

    for (v, label) in xa.ticks() {
        if let Some(u) = xa.coord(v) {
            let x = px(u);
            writeln!(s, r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#, TOP + ph, TOP + ph + 4.0)?;
            writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{label}</text>"#, TOP + ph + 16.0)?;
        }
    }
    for (v, label) in ya.ticks() {
        if let Some(u) = ya.coord(v) {
            let y = py(u);
            writeln!(s, r#"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/>"#, LEFT - 4.0)?;
            writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"#, LEFT - 6.0, y + 4.0)?;
        }
    }
    writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, LEFT + pw / 2.0, HEIGHT - 10.0, escape(&spec.x))?;
    if series.len() == 1 {
        writeln!(
            s,
            r#"<text x="14" y="{:.2}" text-anchor="middle" transform="rotate(-90 14 {:.2})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            escape(&series[0].0)
        )?;
    }

    for (k, (name, ys)) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let pts: Vec<(f64, f64)> = xs
            .iter()
            .zip(ys)
            .filter_map(|(&x, &y)| Some((px(xa.coord(x)?), py(ya.coord(y)?))))
            .collect();
        writeln!(s, r#"<g class="series" data-name="{}">"#, escape(name))?;
        match spec.kind {
            PlotKind::Line => {
                let path: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, path.join(" "))?;
            }
            PlotKind::Scatter => {
                for (x, y) in &pts {
                    writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="2.5" fill="{color}"/>"#)?;
                }
            }
        }
        writeln!(s, "</g>")?;
    }

    if series.len() > 1 {
        let lx = LEFT + pw - 150.0;
        writeln!(
            s,
            r#"<g class="legend"><rect x="{lx:.2}" y="{:.2}" width="140" height="{:.2}" fill="white" stroke="gray"/>"#,
            TOP + 6.0,
            8.0 + 16.0 * series.len() as f64
        )?;
        for (k, (name, _)) in series.iter().enumerate() {
            let y = TOP + 20.0 + 16.0 * k as f64;
            let color = PALETTE[k % PALETTE.len()];
            writeln!(s, r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="2"/>"#, lx + 6.0, y - 4.0, lx + 26.0, y - 4.0)?;
            writeln!(s, r#"<text x="{:.2}" y="{y:.2}">{}</text>"#, lx + 32.0, escape(name))?;
        }
        writeln!(s, "</g>")?;
    }
    writeln!(s, "</svg>")?;
    Ok(s)
}

/// Read `csv_path` and render it.
pub fn emit_plot(csv_path: &Path, spec: &PlotSpec) -> Result<String> {
    let bytes = std::fs::read(csv_path).with_context(|| format!("reading {}", csv_path.display()))?;
    if bytes.iter().all(u8::is_ascii_whitespace) {
        bail!("csv {} is empty", csv_path.display());
    }
    let cols = Columns::parse(&bytes).with_context(|| format!("parsing {}", csv_path.display()))?;
    render_svg(&cols, spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(y: &[&str]) -> PlotSpec {
        PlotSpec {
            x: "r".into(),
            y: y.iter().map(|s| s.to_string()).collect(),
            logx: true,
            logy: false,
            kind: PlotKind::Line,
            title: None,
        }
    }

    #[test]
    fn missing_column_is_named() {
        let cols = Columns::parse(b"r,ratio\n1,2\n").unwrap();
        let err = render_svg(&cols, &spec(&["nope"])).unwrap_err().to_string();
        assert!(err.contains("`nope`"), "{err}");
    }

    #[test]
    fn header_only_is_an_error() {
        assert!(Columns::parse(b"r,ratio\n").is_err());
    }

    #[test]
    fn legend_only_for_several_series() {
        let cols = Columns::parse(b"r,a,b\n0.1,1,2\n1,2,3\n").unwrap();
        assert!(!render_svg(&cols, &spec(&["a"])).unwrap().contains("legend"));
        let two = render_svg(&cols, &spec(&["a", "b"])).unwrap();
        assert!(two.contains("legend") && two.contains(">a</text>") && two.contains(">b</text>"));
    }
}
