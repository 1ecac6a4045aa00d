use rayon::prelude::*;

use super::{CsvTable, Measured, ProtocolError};
use crate::config::Config;
use crate::device::DeviceParams;
use crate::dynamics::{measured_energy, normalization_voltage, ringdown_protocol, RingdownSettings};
use crate::extraction::{fit_ringdown_with, on_off_ratio, plateau_kappa_max, FitResult, PlateauPoint};
use crate::trace::RealTrace;

pub const FIG2C_HEADER: [&str; 3] = ["bias_phi0", "kappa_hz", "energy_photons"];
pub const FIG2B_TIME_COLUMN: &str = "time_s";

#[derive(Debug, Clone)]
pub struct Fig2cRow {
    pub bias: f64,
    pub fit: Option<FitResult>,
    /// Photons delivered into the line.
    pub energy: f64,
    /// Photons in the cavity at the switch.
    pub stored: f64,
    /// Configured external coupling at this bias, for bookkeeping checks.
    pub kappa_ext_model: f64,
    pub kappa_total_model: f64,
    pub error: Option<String>,
}

impl Fig2cRow {
    fn value(&self, name: &str) -> f64 {
        self.fit.as_ref().and_then(|f| f.value(name)).unwrap_or(f64::NAN)
    }

    fn std_error(&self, name: &str) -> f64 {
        self.fit.as_ref().and_then(|f| f.std_error(name)).unwrap_or(f64::NAN)
    }

    pub fn kappa(&self) -> f64 {
        self.value("kappa")
    }

    pub fn gamma_c(&self) -> f64 {
        self.value("gamma_c")
    }
}

#[derive(Debug, Clone)]
pub struct Fig2cResult {
    pub rows: Vec<Fig2cRow>,
    pub kappa_int: Measured,
    /// Largest plateau linewidth minus the internal loss, Hz.
    pub kappa_max: Measured,
    pub on_off_ratio: Measured,
    /// Filter corner averaged over under-coupled rows, Hz.
    pub gamma_c: Measured,
}

impl Fig2cResult {
    pub fn table(&self) -> CsvTable {
        CsvTable::new(&FIG2C_HEADER, self.rows.iter().map(|r| vec![r.bias, r.kappa(), r.energy]).collect())
    }

    pub fn plateau_points(&self) -> Vec<PlateauPoint> {
        self.rows.iter().map(|r| PlateauPoint { bias: r.bias, kappa: r.kappa(), energy: r.energy }).collect()
    }
}

fn ringdown_row(device: &DeviceParams, cfg: &Config, settings: &RingdownSettings, g: f64) -> Fig2cRow {
    let bias = device.operating_point.at(g);
    let model = (
        crate::device::external_coupling(device, bias).unwrap_or(f64::NAN),
        crate::device::kappa_total(device, bias).unwrap_or(f64::NAN),
    );
    let run = || -> Result<(FitResult, f64, f64), ProtocolError> {
        let rec = ringdown_protocol(device, bias, cfg.ringdown.stored_photons, settings)?;
        let fit = fit_ringdown_with(&rec.filtered, &cfg.ringdown_fit_options())?;
        let energy = measured_energy(&rec.readout_voltage(), device, bias)?;
        Ok((fit, energy, rec.stored_photons))
    };
    match run() {
        Ok((fit, energy, stored)) => Fig2cRow {
            bias: g,
            fit: Some(fit),
            energy,
            stored,
            kappa_ext_model: model.0,
            kappa_total_model: model.1,
            error: None,
        },
        Err(e) => Fig2cRow {
            bias: g,
            fit: None,
            energy: f64::NAN,
            stored: f64::NAN,
            kappa_ext_model: model.0,
            kappa_total_model: model.1,
            error: Some(e.to_string()),
        },
    }
}

/// Ringdowns over the gradiometric grid: linewidth and delivered energy per
/// bias, the plateau coupling, the on/off ratio against `kappa_int`, and the
/// filter corner from the under-coupled rows.
pub fn run_fig2c(device: &DeviceParams, cfg: &Config, kappa_int: Measured) -> Result<Fig2cResult, ProtocolError> {
    let settings = cfg.ringdown_settings()?;
    let rows: Vec<Fig2cRow> =
        cfg.fig2c.bias_grid_phi0.par_iter().map(|&g| ringdown_row(device, cfg, &settings, g)).collect();
    if rows.iter().all(|r| r.fit.is_none()) {
        let first = rows.iter().find_map(|r| r.error.clone()).unwrap_or_default();
        return Err(ProtocolError::Experiment(format!("every ringdown failed; first error: {first}")));
    }

    let points: Vec<PlateauPoint> =
        rows.iter().map(|r| PlateauPoint { bias: r.bias, kappa: r.kappa(), energy: r.energy }).collect();
    let kmax = plateau_kappa_max(&points, kappa_int.value, cfg.fig2c.plateau_threshold)?;
    let kmax_row = rows.iter().find(|r| r.kappa() - kappa_int.value == kmax).expect("plateau row exists");
    let kappa_max = Measured::new(kmax, kmax_row.std_error("kappa").hypot(kappa_int.uncertainty));
    let ratio = on_off_ratio(kappa_max.value, kappa_int.value);
    let ratio_err = ratio * (kappa_max.relative().powi(2) + kappa_int.relative().powi(2)).sqrt();

    let under: Vec<&Fig2cRow> = rows
        .iter()
        .filter(|r| {
            r.fit.as_ref().is_some_and(|f| !f.is_at_bound("gamma_c"))
                && r.kappa() < cfg.fig2c.under_coupled_max_kappa_ratio * kappa_int.value
        })
        .collect();
    if under.is_empty() {
        return Err(ProtocolError::Experiment("no under-coupled ringdown to estimate the filter corner".into()));
    }
    let m = under.len() as f64;
    let gamma_c = Measured::new(
        under.iter().map(|r| r.gamma_c()).sum::<f64>() / m,
        under.iter().map(|r| r.std_error("gamma_c").powi(2)).sum::<f64>().sqrt() / m,
    );
    Ok(Fig2cResult { rows, kappa_int, kappa_max, on_off_ratio: Measured::new(ratio, ratio_err), gamma_c })
}

#[derive(Debug, Clone)]
pub struct Fig2bResult {
    pub biases: Vec<f64>,
    pub traces: Vec<RealTrace>,
    /// V₀ = √(E_stored κ_g Z₀) at the reference (last) bias.
    pub reference_voltage: f64,
}

impl Fig2bResult {
    pub fn column_names(&self) -> Vec<String> {
        let mut names = vec![FIG2B_TIME_COLUMN.to_string()];
        names.extend(self.biases.iter().map(|b| format!("v_{b}")));
        names
    }

    /// Filtered voltages side by side on the shared time base.
    pub fn table(&self) -> CsvTable {
        let len = self.traces.iter().map(|t| t.len()).min().unwrap_or(0);
        let rows = (0..len)
            .map(|i| {
                let mut row = vec![self.traces[0].time(i)];
                row.extend(self.traces.iter().map(|t| t.samples()[i]));
                row
            })
            .collect();
        let names = self.column_names();
        let header: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        CsvTable::new(&header, rows)
    }
}

/// Filtered ringdown traces at a few biases on a common window.
pub fn run_fig2b(device: &DeviceParams, cfg: &Config) -> Result<Fig2bResult, ProtocolError> {
    let mut settings = cfg.ringdown_settings()?;
    settings.window = Some(cfg.fig2b.window_s);
    let op = device.operating_point;
    let records = cfg
        .fig2b
        .bias_phi0
        .par_iter()
        .map(|&g| ringdown_protocol(device, op.at(g), cfg.ringdown.stored_photons, &settings))
        .collect::<Result<Vec<_>, _>>()?;
    let last = records.last().expect("fig2b has at least one bias");
    let kappa_g = crate::device::external_coupling(device, last.readout_bias)?;
    let reference_voltage =
        normalization_voltage(last.stored_photons, kappa_g, last.readout_frequency, device.line_impedance);
    Ok(Fig2bResult {
        biases: cfg.fig2b.bias_phi0.clone(),
        traces: records.into_iter().map(|r| r.filtered).collect(),
        reference_voltage,
    })
}
