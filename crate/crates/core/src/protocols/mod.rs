//! Virtual experiments, the performance report, and their file outputs.

mod fig2a;
mod fig2c;
mod fig3;
mod plot;
mod table1;

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::config::{Config, ConfigError};
use crate::csvfmt::{fmt_real, parse_row};
use crate::device::DeviceError;
use crate::dynamics::DynamicsError;
use crate::extraction::FitError;
use crate::spectroscopy::SpectroscopyError;

pub use fig2a::{run_fig2a, Fig2aResult, Fig2aRow, FIG2A_HEADER};
pub use fig2c::{run_fig2b, run_fig2c, Fig2bResult, Fig2cResult, Fig2cRow, FIG2B_TIME_COLUMN, FIG2C_HEADER};
pub use fig3::{run_fig3, Fig3Result, FIG3_HEADER};
pub use plot::{emit_plot, render_svg, Panel, PlotError, PlotKind, PlotSpec};
pub use table1::{run_table1, Measured, Table1Outputs, Table1Report};

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Spectroscopy(#[from] SpectroscopyError),
    #[error(transparent)]
    Device(#[from] DeviceError),
    #[error(transparent)]
    Plot(#[from] PlotError),
    #[error("{context}: {source}")]
    Io { context: String, source: std::io::Error },
    #[error("malformed CSV: {0}")]
    Csv(String),
    #[error("{0}")]
    Experiment(String),
}

impl ProtocolError {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        !matches!(self, ProtocolError::Config(_) | ProtocolError::Io { .. } | ProtocolError::Csv(_))
    }
}

pub(crate) fn io_err(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> ProtocolError {
    let context = context.into();
    move |source| ProtocolError::Io { context, source }
}

/// A numeric table with a header row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn new(header: &[&str], rows: Vec<Vec<f64>>) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows }
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn write<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", self.header.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| fmt_real(*v)).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(r: R) -> Result<Self, ProtocolError> {
        let mut lines = r.lines();
        let header: Vec<String> = match lines.next() {
            Some(line) => line.map_err(io_err("reading CSV header"))?.split(',').map(|s| s.trim().to_string()).collect(),
            None => return Err(ProtocolError::Csv("empty file".into())),
        };
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line.map_err(io_err("reading CSV"))?;
            if line.trim().is_empty() {
                continue;
            }
            let row = parse_row(&line).map_err(|e| ProtocolError::Csv(format!("line {}: {e}", i + 2)))?;
            if row.len() != header.len() {
                return Err(ProtocolError::Csv(format!(
                    "line {}: {} fields, header has {}",
                    i + 2,
                    row.len(),
                    header.len()
                )));
            }
            rows.push(row);
        }
        Ok(Self { header, rows })
    }

    pub fn save(&self, path: &Path) -> Result<(), ProtocolError> {
        let file = std::fs::File::create(path).map_err(io_err(format!("creating {}", path.display())))?;
        let mut w = std::io::BufWriter::new(file);
        self.write(&mut w).map_err(io_err(format!("writing {}", path.display())))?;
        w.flush().map_err(io_err(format!("writing {}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self, ProtocolError> {
        let file = std::fs::File::open(path).map_err(io_err(format!("opening {}", path.display())))?;
        Self::read(std::io::BufReader::new(file))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    ReflectionSweep,
    RingdownSweep,
    KerrSweep,
    Table1,
}

/// One fully specified run: configuration, grids and destination.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    /// `None` uses the shipped default.
    pub device_config_path: Option<PathBuf>,
    pub config: Config,
    pub output_dir: PathBuf,
}

impl ExperimentSpec {
    pub fn new(kind: ExperimentKind, device_config_path: Option<PathBuf>, output_dir: PathBuf) -> Result<Self, ConfigError> {
        let config = match &device_config_path {
            Some(p) => Config::load(p)?,
            None => Config::shipped(),
        };
        Ok(Self { kind, device_config_path, config, output_dir })
    }

    pub fn with_bias_grid(mut self, grid: Vec<f64>) -> Result<Self, ConfigError> {
        match self.kind {
            ExperimentKind::ReflectionSweep => self.config.fig2a.bias_grid_phi0 = grid,
            ExperimentKind::RingdownSweep => self.config.fig2c.bias_grid_phi0 = grid,
            _ => return Err(ConfigError::Invalid("bias grid only applies to reflection and ringdown sweeps".into())),
        }
        self.config.validate()?;
        Ok(self)
    }

    pub fn with_power_grid(mut self, start: f64, stop: f64, points: usize) -> Result<Self, ConfigError> {
        if self.kind != ExperimentKind::KerrSweep {
            return Err(ConfigError::Invalid("power grid only applies to the Kerr sweep".into()));
        }
        self.config.fig3.power_start_w = start;
        self.config.fig3.power_stop_w = stop;
        self.config.fig3.power_points = points;
        self.config.validate()?;
        Ok(self)
    }

    /// Run and write outputs; returns the paths written.
    pub fn run(&self) -> Result<Vec<PathBuf>, ProtocolError> {
        std::fs::create_dir_all(&self.output_dir)
            .map_err(io_err(format!("creating {}", self.output_dir.display())))?;
        let cfg = &self.config;
        let device = cfg.device()?;
        let out = |name: &str| self.output_dir.join(name);
        let mut written = Vec::new();
        match self.kind {
            ExperimentKind::ReflectionSweep => {
                let r = run_fig2a(&device, &cfg.fig2a)?;
                r.table().save(&out("fig2a.csv"))?;
                written.push(out("fig2a.csv"));
            }
            ExperimentKind::RingdownSweep => {
                let a = run_fig2a(&device, &cfg.fig2a)?;
                let r = run_fig2c(&device, cfg, Measured::new(a.kappa_int(), a.kappa_int_error()))?;
                r.table().save(&out("fig2c.csv"))?;
                written.push(out("fig2c.csv"));
                let b = run_fig2b(&device, cfg)?;
                b.table().save(&out("fig2b.csv"))?;
                written.push(out("fig2b.csv"));
            }
            ExperimentKind::KerrSweep => {
                let a = run_fig2a(&device, &cfg.fig2a)?;
                let r = run_fig3(&device, a.critical.bias, a.kappa(), cfg)?;
                r.table().save(&out("fig3.csv"))?;
                written.push(out("fig3.csv"));
            }
            ExperimentKind::Table1 => {
                let t = run_table1(cfg)?;
                written.extend(t.write_all(&self.output_dir)?);
            }
        }
        Ok(written)
    }
}
