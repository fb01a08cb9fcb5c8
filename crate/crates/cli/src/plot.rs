//! Deterministic SVG line plots of CSV columns.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{CliError, CliResult};

pub const WIDTH: f64 = 960.0;
pub const HEIGHT: f64 = 600.0;
const LEFT: f64 = 90.0;
const RIGHT: f64 = 200.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 70.0;
const PALETTE: [&str; 8] =
    ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub x: String,
    pub columns: Vec<String>,
    pub log_x: bool,
    pub log_y: bool,
}

/// A CSV table read as floats; cells that do not parse become NaN.
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn read(path: &Path) -> CliResult<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let header = r.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            rows.push(rec?.iter().map(|c| c.parse().unwrap_or(f64::NAN)).collect());
        }
        Ok(Self { header, rows })
    }

    fn column(&self, name: &str) -> CliResult<Vec<f64>> {
        let i = self
            .header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::UnknownColumn(name.to_string()))?;
        Ok(self.rows.iter().map(|r| r[i]).collect())
    }
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.filter(|v| usable(*v, log)) {
            let v = if log { v.log10() } else { v };
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if log {
            (lo, hi) = (lo.floor(), hi.ceil());
        }
        if hi - lo < 1e-300_f64.max(1e-12 * hi.abs()) {
            let pad = if lo == 0.0 { 1.0 } else { 0.5 * lo.abs() };
            (lo, hi) = (lo - pad, hi + pad);
            if log {
                (lo, hi) = (lo.floor(), hi.ceil());
            }
        }
        Self { lo, hi, log }
    }

    /// Map a data value to `[0, 1]`.
    fn unit(&self, v: f64) -> f64 {
        let v = if self.log { v.log10() } else { v };
        (v - self.lo) / (self.hi - self.lo)
    }

    /// Tick values in data units with labels: decades on log axes, a
    /// 1-2-5 step on linear ones.
    fn ticks(&self) -> Vec<(f64, String)> {
        if self.log {
            let (a, b) = (self.lo as i32, self.hi as i32);
            let stride = ((b - a + 11) / 12).max(1);
            return (a..=b)
                .filter(|e| (e - a) % stride == 0)
                .map(|e| (10f64.powi(e), format!("1e{e}")))
                .collect();
        }
        let raw = (self.hi - self.lo) / 6.0;
        let mag = 10f64.powf(raw.log10().floor());
        let step = [1.0, 2.0, 5.0, 10.0]
            .iter()
            .map(|m| m * mag)
            .find(|s| *s >= raw)
            .unwrap_or(10.0 * mag);
        let decimals = (-step.log10().floor()).max(0.0) as usize;
        // Slack so that ticks sitting on the range ends survive rounding.
        let first = (self.lo / step - 1e-9).ceil() as i64;
        let last = (self.hi / step + 1e-9).floor() as i64;
        (first..=last)
            .map(|i| {
                let v = i as f64 * step;
                let label = format!("{v:.decimals$}");
                let label = if label.starts_with('-') && label.trim_matches(['-', '0', '.']).is_empty() {
                    label[1..].to_string()
                } else {
                    label
                };
                (v, label)
            })
            .collect()
    }
}

fn usable(v: f64, log: bool) -> bool {
    v.is_finite() && (!log || v > 0.0)
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Render the selected columns against `spec.x` as a 960×600 SVG document.
pub fn render_plot(table: &Table, spec: &PlotSpec) -> CliResult<String> {
    if spec.columns.is_empty() {
        return Err(CliError::Validation("at least one column to plot".into()));
    }
    let xs = table.column(&spec.x)?;
    let ys: Vec<Vec<f64>> =
        spec.columns.iter().map(|c| table.column(c)).collect::<CliResult<_>>()?;
    let xa = Axis::fit(xs.iter().copied(), spec.log_x);
    let ya = Axis::fit(ys.iter().flatten().copied(), spec.log_y);
    let (pw, ph) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
    let px = |v: f64| LEFT + pw * xa.unit(v);
    let py = |v: f64| TOP + ph * (1.0 - ya.unit(v));

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="13">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for (v, label) in xa.ticks() {
        let x = px(v);
        let _ = writeln!(
            s,
            r##"<line class="xtick" x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#999"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
            TOP + ph,
            TOP + ph + 6.0,
            TOP + ph + 22.0,
            esc(&label)
        );
    }
    for (v, label) in ya.ticks() {
        let y = py(v);
        let _ = writeln!(
            s,
            r##"<line class="ytick" x1="{:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="#999"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
            LEFT - 6.0,
            LEFT - 9.0,
            y + 4.0,
            esc(&label)
        );
    }
    let _ = writeln!(
        s,
        r#"<text class="xlabel" x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + 0.5 * pw,
        HEIGHT - 20.0,
        esc(&spec.x)
    );
    let ylabel = if spec.columns.len() == 1 { spec.columns[0].clone() } else { "value".into() };
    let _ = writeln!(
        s,
        r#"<text class="ylabel" x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">{}</text>"#,
        TOP + 0.5 * ph,
        TOP + 0.5 * ph,
        esc(&ylabel)
    );
    for (i, (name, col)) in spec.columns.iter().zip(&ys).enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let points: Vec<String> = xs
            .iter()
            .zip(col)
            .filter(|(x, y)| usable(**x, spec.log_x) && usable(**y, spec.log_y))
            .map(|(x, y)| format!("{:.2},{:.2}", px(*x), py(*y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline data-column="{}" fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            esc(name),
            points.join(" ")
        );
        let ly = TOP + 10.0 + 20.0 * i as f64;
        let lx = WIDTH - RIGHT + 15.0;
        let _ = writeln!(
            s,
            r#"<g class="legend"><line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text></g>"#,
            lx + 25.0,
            lx + 32.0,
            ly + 4.0,
            esc(name)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> Table {
        Table {
            header: vec!["tau".into(), "a".into(), "b".into()],
            rows: (0..11).map(|i| vec![i as f64, 10f64.powi(-i), 0.5 * i as f64]).collect(),
        }
    }

    #[test]
    fn log_axis_ticks_are_decades() {
        let spec = PlotSpec { x: "tau".into(), columns: vec!["a".into()], log_x: false, log_y: true };
        let svg = render_plot(&table(), &spec).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert_eq!(svg.matches("class=\"ytick\"").count(), 11);
        assert!(svg.contains(">1e-10<") && svg.contains(">1e0<"));
    }

    #[test]
    fn linear_ticks_are_round() {
        let ax = Axis { lo: 0.0, hi: 10.0, log: false };
        let labels: Vec<String> = ax.ticks().into_iter().map(|t| t.1).collect();
        assert_eq!(labels, ["0", "2", "4", "6", "8", "10"]);
        let ax = Axis { lo: -0.3, hi: 0.3, log: false };
        let labels: Vec<String> = ax.ticks().into_iter().map(|t| t.1).collect();
        assert_eq!(labels, ["-0.3", "-0.2", "-0.1", "0.0", "0.1", "0.2", "0.3"]);
    }

    #[test]
    fn legend_follows_request_order() {
        let spec =
            PlotSpec { x: "tau".into(), columns: vec!["b".into(), "a".into()], log_x: false, log_y: false };
        let svg = render_plot(&table(), &spec).unwrap();
        let b = svg.find("data-column=\"b\"").unwrap();
        let a = svg.find("data-column=\"a\"").unwrap();
        assert!(b < a);
        assert_eq!(svg.matches("class=\"legend\"").count(), 2);
    }

    #[test]
    fn unknown_column_is_reported() {
        let spec = PlotSpec { x: "tau".into(), columns: vec!["bogus".into()], log_x: false, log_y: false };
        assert!(matches!(render_plot(&table(), &spec), Err(CliError::UnknownColumn(c)) if c == "bogus"));
    }

    #[test]
    fn constant_series_still_renders() {
        let t = Table { header: vec!["tau".into(), "c".into()], rows: vec![vec![0.0, 2.0], vec![1.0, 2.0]] };
        let spec = PlotSpec { x: "tau".into(), columns: vec!["c".into()], log_x: false, log_y: true };
        let svg = render_plot(&t, &spec).unwrap();
        assert!(!svg.contains("NaN"));
    }
}
