use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use super::{CsvTable, FIG2B_TIME_COLUMN};

#[derive(Debug, Error)]
pub enum PlotError {
    #[error("column `{0}` not found")]
    MissingColumn(String),
    #[error("no plottable data in `{0}`")]
    EmptyData(String),
    #[error("cannot read {path}: {message}")]
    Input { path: String, message: String },
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Fig2a,
    Fig2b,
    Fig2c,
    Fig3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub y_columns: Vec<String>,
    pub y_label: String,
    pub log_y: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub title: String,
    pub x_column: String,
    pub x_label: String,
    pub log_x: bool,
    pub panels: Vec<Panel>,
    /// Divide every y value by the largest |value| of this column.
    pub normalize_by: Option<String>,
    pub markers: bool,
}

fn panel(cols: &[&str], label: &str, log_y: bool) -> Panel {
    Panel { y_columns: cols.iter().map(|s| s.to_string()).collect(), y_label: label.into(), log_y }
}

impl PlotSpec {
    /// Preset for one of the experiment CSVs. The overlay preset takes its
    /// voltage columns from the header and normalizes by the last one.
    pub fn for_kind(kind: PlotKind, header: &[String]) -> Self {
        match kind {
            PlotKind::Fig2a => Self {
                title: "Reflection near critical coupling".into(),
                x_column: "bias_phi0".into(),
                x_label: "gradiometric bias (flux quanta)".into(),
                log_x: false,
                panels: vec![panel(&["kappa_hz"], "linewidth (Hz)", false), panel(&["min_gamma"], "|min reflection|", false)],
                normalize_by: None,
                markers: true,
            },
            PlotKind::Fig2b => {
                let traces: Vec<String> = header.iter().filter(|h| h.as_str() != FIG2B_TIME_COLUMN).cloned().collect();
                Self {
                    title: "Ringdown traces".into(),
                    x_column: FIG2B_TIME_COLUMN.into(),
                    x_label: "time (s)".into(),
                    log_x: false,
                    normalize_by: traces.last().cloned(),
                    panels: vec![Panel { y_columns: traces, y_label: "V / V0".into(), log_y: false }],
                    markers: false,
                }
            }
            PlotKind::Fig2c => Self {
                title: "Ringdown linewidth and delivered energy".into(),
                x_column: "bias_phi0".into(),
                x_label: "gradiometric bias (flux quanta)".into(),
                log_x: false,
                panels: vec![
                    panel(&["kappa_hz"], "linewidth (Hz)", true),
                    panel(&["energy_photons"], "energy (photons)", false),
                ],
                normalize_by: None,
                markers: true,
            },
            PlotKind::Fig3 => Self {
                title: "Power-dependent resonance shift".into(),
                x_column: "photons".into(),
                x_label: "photon number".into(),
                log_x: false,
                panels: vec![panel(&["delta_hz"], "shift (Hz)", false)],
                normalize_by: None,
                markers: true,
            },
        }
    }
}

const WIDTH: f64 = 720.0;
const PANEL_HEIGHT: f64 = 260.0;
const LEFT: f64 = 90.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const GAP: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if (1e-2..1e4).contains(&v.abs()) {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.2e}")
    }
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn new(values: impl Iterator<Item = f64>, log: bool) -> Option<Self> {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            let v = if log { v.log10() } else { v };
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !(lo.is_finite() && hi.is_finite()) {
            return None;
        }
        if hi == lo {
            let pad = if lo == 0.0 { 1.0 } else { 0.05 * lo.abs() };
            lo -= pad;
            hi += pad;
        } else if log {
            lo = lo.floor();
            hi = hi.ceil();
        } else {
            let pad = 0.04 * (hi - lo);
            lo -= pad;
            hi += pad;
        }
        Some(Self { lo, hi, log })
    }

    fn frac(&self, v: f64) -> f64 {
        let v = if self.log { v.log10() } else { v };
        (v - self.lo) / (self.hi - self.lo)
    }

    fn ticks(&self) -> Vec<f64> {
        if self.log {
            return (self.lo as i32..=self.hi as i32).map(|e| 10f64.powi(e)).collect();
        }
        let raw = (self.hi - self.lo) / 5.0;
        let mag = 10f64.powf(raw.log10().floor());
        let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
        let first = (self.lo / step).ceil() as i64;
        let last = (self.hi / step).floor() as i64;
        (first..=last).map(|k| k as f64 * step).collect()
    }
}

fn usable(v: f64, log: bool) -> bool {
    v.is_finite() && (!log || v > 0.0)
}

/// Render `table` as a self-contained SVG document.
pub fn render_svg(table: &CsvTable, spec: &PlotSpec) -> Result<String, PlotError> {
    let col = |name: &str| table.column(name).ok_or_else(|| PlotError::MissingColumn(name.to_string()));
    let x = col(&spec.x_column)?;
    let scale = match &spec.normalize_by {
        Some(name) => {
            let m = col(name)?.iter().filter(|v| v.is_finite()).fold(0.0_f64, |m, v| m.max(v.abs()));
            if m > 0.0 { m } else { return Err(PlotError::EmptyData(name.clone())) }
        }
        None => 1.0,
    };
    let height = TOP + spec.panels.len() as f64 * (PANEL_HEIGHT + GAP);
    let plot_w = WIDTH - LEFT - RIGHT;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, spec.title);

    for (p, panel) in spec.panels.iter().enumerate() {
        let series: Vec<(String, Vec<(f64, f64)>)> = panel
            .y_columns
            .iter()
            .map(|name| {
                let y = col(name)?;
                let pts = x
                    .iter()
                    .zip(&y)
                    .map(|(a, b)| (*a, b / scale))
                    .filter(|(a, b)| usable(*a, spec.log_x) && usable(*b, panel.log_y))
                    .collect();
                Ok((name.clone(), pts))
            })
            .collect::<Result<_, PlotError>>()?;
        let all = || series.iter().flat_map(|(_, pts)| pts.iter());
        let (Some(xa), Some(ya)) =
            (Axis::new(all().map(|p| p.0), spec.log_x), Axis::new(all().map(|p| p.1), panel.log_y))
        else {
            return Err(PlotError::EmptyData(panel.y_columns.join(",")));
        };
        let top = TOP + p as f64 * (PANEL_HEIGHT + GAP);
        let px = |v: f64| LEFT + xa.frac(v) * plot_w;
        let py = |v: f64| top + (1.0 - ya.frac(v)) * PANEL_HEIGHT;
        let _ = writeln!(
            s,
            r##"<rect x="{LEFT}" y="{top}" width="{plot_w}" height="{PANEL_HEIGHT}" fill="none" stroke="#333"/>"##
        );
        for t in xa.ticks() {
            let u = px(t);
            let _ = writeln!(
                s,
                r##"<line x1="{u:.2}" y1="{:.2}" x2="{u:.2}" y2="{:.2}" stroke="#333"/><text x="{u:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
                top + PANEL_HEIGHT,
                top + PANEL_HEIGHT + 5.0,
                top + PANEL_HEIGHT + 18.0,
                tick_label(t)
            );
        }
        for t in ya.ticks() {
            let v = py(t);
            let _ = writeln!(
                s,
                r##"<line x1="{:.2}" y1="{v:.2}" x2="{LEFT}" y2="{v:.2}" stroke="#333"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
                LEFT - 5.0,
                LEFT - 8.0,
                v + 4.0,
                tick_label(t)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            LEFT + plot_w / 2.0,
            top + PANEL_HEIGHT + 36.0,
            spec.x_label
        );
        let _ = writeln!(
            s,
            r#"<text transform="translate(18 {:.2}) rotate(-90)" text-anchor="middle">{}</text>"#,
            top + PANEL_HEIGHT / 2.0,
            panel.y_label
        );
        for (k, (name, pts)) in series.iter().enumerate() {
            let color = COLORS[k % COLORS.len()];
            if pts.len() > 1 {
                let path: Vec<String> = pts.iter().map(|(a, b)| format!("{:.2},{:.2}", px(*a), py(*b))).collect();
                let _ = writeln!(
                    s,
                    r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                    path.join(" ")
                );
            }
            if spec.markers {
                for (a, b) in pts {
                    let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, px(*a), py(*b));
                }
            }
            if series.len() > 1 {
                let ly = top + 16.0 + 14.0 * k as f64;
                let _ = writeln!(
                    s,
                    r#"<text x="{:.2}" y="{ly:.2}" fill="{color}" text-anchor="end">{name}</text>"#,
                    LEFT + plot_w - 8.0
                );
            }
        }
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Read a CSV and write its plot to `out_path`.
pub fn emit_plot(csv_path: &Path, spec: &PlotSpec, out_path: &Path) -> Result<(), PlotError> {
    let table = CsvTable::load(csv_path)
        .map_err(|e| PlotError::Input { path: csv_path.display().to_string(), message: e.to_string() })?;
    let svg = render_svg(&table, spec)?;
    std::fs::write(out_path, svg).map_err(|source| PlotError::Io { path: out_path.display().to_string(), source })
}
