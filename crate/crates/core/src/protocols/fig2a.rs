use rayon::prelude::*;

use super::{CsvTable, ProtocolError};
use crate::config::Fig2aSection;
use crate::device::DeviceParams;
use crate::extraction::{critical_coupling_search, fit_reflection, synthetic_reflection_sweep, CouplingSearch, FitResult};

pub const FIG2A_HEADER: [&str; 3] = ["bias_phi0", "kappa_hz", "min_gamma"];

#[derive(Debug, Clone)]
pub struct Fig2aRow {
    pub bias: f64,
    /// `None` when the fit at this bias failed; the message is kept in `error`.
    pub fit: Option<FitResult>,
    pub error: Option<String>,
}

impl Fig2aRow {
    fn value(&self, name: &str) -> f64 {
        self.fit.as_ref().and_then(|f| f.value(name)).unwrap_or(f64::NAN)
    }

    pub fn kappa(&self) -> f64 {
        self.value("kappa")
    }

    pub fn min_reflection(&self) -> f64 {
        self.value("min_reflection")
    }
}

#[derive(Debug, Clone)]
pub struct Fig2aResult {
    /// Grid rows plus the refined critical point, in bias order.
    pub rows: Vec<Fig2aRow>,
    pub critical: CouplingSearch,
}

impl Fig2aResult {
    /// Internal loss from the fit at the critical bias, Hz.
    pub fn kappa_int(&self) -> f64 {
        self.critical.fit.value("kappa_int").unwrap_or(f64::NAN)
    }

    pub fn kappa_int_error(&self) -> f64 {
        self.critical.fit.std_error("kappa_int").unwrap_or(f64::NAN)
    }

    /// Total linewidth at the critical bias, Hz.
    pub fn kappa(&self) -> f64 {
        self.critical.fit.value("kappa").unwrap_or(f64::NAN)
    }

    /// Row with the smallest fitted |Γ_min|.
    pub fn minimum(&self) -> Option<&Fig2aRow> {
        self.rows
            .iter()
            .filter(|r| r.fit.is_some())
            .min_by(|a, b| a.min_reflection().total_cmp(&b.min_reflection()))
    }

    pub fn table(&self) -> CsvTable {
        CsvTable::new(
            &FIG2A_HEADER,
            self.rows.iter().map(|r| vec![r.bias, r.kappa(), r.min_reflection()]).collect(),
        )
    }
}

/// Reflection sweeps over the gradiometric grid, plus a golden-section
/// refinement of the critical bias inside the configured bracket.
pub fn run_fig2a(device: &DeviceParams, cfg: &Fig2aSection) -> Result<Fig2aResult, ProtocolError> {
    let op = device.operating_point;
    let mut rows: Vec<Fig2aRow> = cfg
        .bias_grid_phi0
        .par_iter()
        .map(|&g| {
            let fit = synthetic_reflection_sweep(device, op.at(g), cfg.sweep_half_span_linewidths, cfg.sweep_points, cfg.probe_photons)
                .and_then(|s| fit_reflection(&s));
            match fit {
                Ok(f) => Fig2aRow { bias: g, fit: Some(f), error: None },
                Err(e) => Fig2aRow { bias: g, fit: None, error: Some(e.to_string()) },
            }
        })
        .collect();
    let [lo, hi] = cfg.search_bracket_phi0;
    let critical = critical_coupling_search(device, lo, hi, cfg.search_tolerance_phi0)?;
    let g = critical.bias.gradiometric;
    let at = rows.partition_point(|r| r.bias < g);
    if rows.get(at).is_none_or(|r| r.bias != g) {
        rows.insert(at, Fig2aRow { bias: g, fit: Some(critical.fit.clone()), error: None });
    }
    if rows.iter().all(|r| r.fit.is_none()) {
        return Err(ProtocolError::Experiment("every reflection fit failed".into()));
    }
    Ok(Fig2aResult { rows, critical })
}
