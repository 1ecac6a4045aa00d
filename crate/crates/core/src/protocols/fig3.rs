use rayon::prelude::*;

use super::{CsvTable, ProtocolError};
use crate::config::Config;
use crate::device::{BiasPoint, DeviceParams};
use crate::extraction::{fit_kerr, FitResult, KerrPoint};
use crate::spectroscopy::{
    linear_grid, photon_number, resonance_by_phase_slope, sweep_with_rates, CavityRates, SweepDirection,
};

pub const FIG3_HEADER: [&str; 3] = ["photons", "delta_hz", "bistable_flag"];

#[derive(Debug, Clone)]
pub struct Fig3Result {
    pub bias: BiasPoint,
    pub powers: Vec<f64>,
    /// Phase-slope resonance per power, Hz.
    pub resonances: Vec<f64>,
    pub points: Vec<KerrPoint>,
    pub fit: FitResult,
}

impl Fig3Result {
    pub fn table(&self) -> CsvTable {
        CsvTable::new(
            &FIG3_HEADER,
            self.points.iter().map(|p| vec![p.photons, p.shift, if p.bistable { 1.0 } else { 0.0 }]).collect(),
        )
    }

    pub fn kerr(&self) -> f64 {
        self.fit.value("kerr_hz_per_photon").unwrap_or(f64::NAN)
    }
}

/// Upward nonlinear reflection sweeps at `bias` over the configured power
/// grid. The resonance shift is taken from the phase-slope maximum relative
/// to the lowest power, and the photon number from the incident power and
/// the measured linewidth `kappa`.
pub fn run_fig3(device: &DeviceParams, bias: BiasPoint, kappa: f64, cfg: &Config) -> Result<Fig3Result, ProtocolError> {
    let rates = CavityRates::at(device, bias)?;
    let span = cfg.fig3.sweep_half_span_linewidths * kappa;
    let points_per_sweep = (2.0 * span / cfg.fig3.frequency_step_hz).round() as usize + 1;
    let grid = linear_grid(rates.frequency - span, rates.frequency + span, points_per_sweep);
    let powers = cfg.fig3.power_grid();
    let measured = powers
        .par_iter()
        .map(|&p| -> Result<(f64, bool), ProtocolError> {
            let sweep = sweep_with_rates(&rates, bias, &grid, p, SweepDirection::Up)?;
            Ok((resonance_by_phase_slope(&sweep.sweep)?, sweep.bistable))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let reference = measured[0].0;
    let points: Vec<KerrPoint> = powers
        .iter()
        .zip(&measured)
        .map(|(p, (f, bistable))| KerrPoint::new(photon_number(*p, kappa, rates.frequency), f - reference, *bistable))
        .collect();
    let fit = fit_kerr(&points, kappa)?;
    Ok(Fig3Result { bias, powers, resonances: measured.iter().map(|m| m.0).collect(), points, fit })
}
