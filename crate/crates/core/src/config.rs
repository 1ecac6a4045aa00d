//! Structured configuration: device, ringdown settings and experiment grids.

use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::device::{
    self, CavityParams, DeviceError, DeviceParams, JunctionParams, OperatingPoint, ParasiticLoss, TibBridge,
};
use crate::dynamics::{AdcModel, Detection, RingdownSettings};
use crate::extraction::RingdownFitOptions;

/// The shipped default configuration.
pub const DEFAULT_CONFIG: &str = include_str!("../config/default.toml");

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed configuration: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("invalid device: {0}")]
    Device(#[from] DeviceError),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavitySection {
    pub bare_frequency_hz: f64,
    pub bare_loss_hz: f64,
    pub chip_loss_hz: f64,
    pub inductive_participation: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BridgeSection {
    pub squids_per_arm: u32,
    pub critical_current_a: f64,
    pub kappa_max_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BiasSection {
    pub uniform_phi0: f64,
    pub on_gradiometric_phi0: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineSection {
    pub impedance_ohm: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParasiticSection {
    pub enabled: bool,
    pub threshold_phi0: f64,
    pub slope_hz_per_phi0: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RingdownSection {
    pub stored_photons: f64,
    pub timestep_s: f64,
    pub hold_s: f64,
    pub pretrigger_s: f64,
    pub settle_decay_times: f64,
    pub adc_corner_hz: f64,
    pub fit_nominal_corner_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fig2aSection {
    pub bias_grid_phi0: Vec<f64>,
    pub sweep_half_span_linewidths: f64,
    pub sweep_points: usize,
    pub probe_photons: f64,
    pub search_bracket_phi0: [f64; 2],
    pub search_tolerance_phi0: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fig2bSection {
    pub bias_phi0: Vec<f64>,
    pub window_s: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fig2cSection {
    pub bias_grid_phi0: Vec<f64>,
    pub plateau_threshold: f64,
    pub under_coupled_max_kappa_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fig3Section {
    pub power_start_w: f64,
    pub power_stop_w: f64,
    pub power_points: usize,
    pub sweep_half_span_linewidths: f64,
    pub frequency_step_hz: f64,
}

impl Fig3Section {
    /// Log-spaced incident powers, W.
    pub fn power_grid(&self) -> Vec<f64> {
        let (a, b) = (self.power_start_w.ln(), self.power_stop_w.ln());
        let n = self.power_points;
        (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub cavity: CavitySection,
    pub bridge: BridgeSection,
    pub bias: BiasSection,
    pub line: LineSection,
    pub parasitic: ParasiticSection,
    pub ringdown: RingdownSection,
    pub fig2a: Fig2aSection,
    pub fig2b: Fig2bSection,
    pub fig2c: Fig2cSection,
    pub fig3: Fig3Section,
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

fn positive(name: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

fn monotone_grid(name: &str, grid: &[f64]) -> Result<(), ConfigError> {
    if grid.is_empty() {
        return Err(invalid(format!("{name} is empty")));
    }
    if grid.iter().any(|v| !v.is_finite()) || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid(format!("{name} must be finite and strictly increasing")));
    }
    Ok(())
}

impl Config {
    pub fn shipped() -> Self {
        Self::from_toml_str(DEFAULT_CONFIG).expect("shipped configuration is valid")
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: Config = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        positive("bridge.kappa_max_hz", self.bridge.kappa_max_hz)?;
        positive("ringdown.stored_photons", self.ringdown.stored_photons)?;
        positive("ringdown.timestep_s", self.ringdown.timestep_s)?;
        positive("ringdown.hold_s", self.ringdown.hold_s)?;
        positive("ringdown.settle_decay_times", self.ringdown.settle_decay_times)?;
        positive("ringdown.adc_corner_hz", self.ringdown.adc_corner_hz)?;
        positive("ringdown.fit_nominal_corner_hz", self.ringdown.fit_nominal_corner_hz)?;
        if !(self.ringdown.pretrigger_s >= 0.0 && self.ringdown.pretrigger_s < self.ringdown.hold_s) {
            return Err(invalid("ringdown.pretrigger_s must lie in [0, hold_s)"));
        }
        monotone_grid("fig2a.bias_grid_phi0", &self.fig2a.bias_grid_phi0)?;
        positive("fig2a.sweep_half_span_linewidths", self.fig2a.sweep_half_span_linewidths)?;
        positive("fig2a.probe_photons", self.fig2a.probe_photons)?;
        positive("fig2a.search_tolerance_phi0", self.fig2a.search_tolerance_phi0)?;
        if self.fig2a.sweep_points < 6 {
            return Err(invalid("fig2a.sweep_points must be at least 6"));
        }
        monotone_grid("fig2a.search_bracket_phi0", &self.fig2a.search_bracket_phi0)?;
        if self.fig2b.bias_phi0.is_empty() {
            return Err(invalid("fig2b.bias_phi0 is empty"));
        }
        positive("fig2b.window_s", self.fig2b.window_s)?;
        monotone_grid("fig2c.bias_grid_phi0", &self.fig2c.bias_grid_phi0)?;
        if !(self.fig2c.plateau_threshold > 0.0 && self.fig2c.plateau_threshold <= 1.0) {
            return Err(invalid("fig2c.plateau_threshold must lie in (0, 1]"));
        }
        positive("fig2c.under_coupled_max_kappa_ratio", self.fig2c.under_coupled_max_kappa_ratio)?;
        positive("fig3.power_start_w", self.fig3.power_start_w)?;
        positive("fig3.power_stop_w", self.fig3.power_stop_w)?;
        if self.fig3.power_points < 2 || !(self.fig3.power_stop_w > self.fig3.power_start_w) {
            return Err(invalid("fig3 power grid needs at least 2 increasing points"));
        }
        positive("fig3.sweep_half_span_linewidths", self.fig3.sweep_half_span_linewidths)?;
        positive("fig3.frequency_step_hz", self.fig3.frequency_step_hz)?;
        if self.parasitic.enabled {
            positive("parasitic.slope_hz_per_phi0", self.parasitic.slope_hz_per_phi0)?;
        }
        self.device().map(|_| ())
    }

    /// Device model with the coupling scale calibrated to `kappa_max_hz` at the on-bias.
    pub fn device(&self) -> Result<DeviceParams, ConfigError> {
        let c = &self.cavity;
        let cavity = CavityParams::new(c.bare_frequency_hz, c.bare_loss_hz, c.chip_loss_hz, c.inductive_participation)?;
        let bridge =
            TibBridge::symmetric(self.bridge.squids_per_arm, JunctionParams::new(self.bridge.critical_current_a)?, 1.0)?;
        let op = OperatingPoint { uniform: self.bias.uniform_phi0, on_gradiometric: self.bias.on_gradiometric_phi0 };
        let parasitic = self.parasitic.enabled.then_some(ParasiticLoss {
            slope: self.parasitic.slope_hz_per_phi0,
            threshold: self.parasitic.threshold_phi0,
        });
        let raw = DeviceParams::new(cavity, bridge, op, self.line.impedance_ohm, parasitic)?;
        // reference bias must be regular
        device::cavity_frequency(&raw, op.off_bias())?;
        Ok(device::calibrate_coupling_scale(&raw, op.on_bias(), self.bridge.kappa_max_hz)?)
    }

    pub fn ringdown_settings(&self) -> Result<RingdownSettings, ConfigError> {
        let r = &self.ringdown;
        Ok(RingdownSettings {
            dt: r.timestep_s,
            hold_time: r.hold_s,
            pretrigger: r.pretrigger_s,
            window: None,
            settle_decay_times: r.settle_decay_times,
            adc: AdcModel::new(r.adc_corner_hz).map_err(|e| invalid(e.to_string()))?,
            detection: Detection::default(),
        })
    }

    pub fn ringdown_fit_options(&self) -> RingdownFitOptions {
        RingdownFitOptions { nominal_corner: self.ringdown.fit_nominal_corner_hz, ..RingdownFitOptions::default() }
    }
}
