//! Parameter recovery from sweeps and traces by nonlinear least squares.
//!
//! Reported uncertainties are one-sigma standard errors from the fit
//! covariance (residual variance times the inverse Gauss–Newton Hessian).

mod coupling;
mod kerr;
pub mod least_squares;
mod reflection;
mod ringdown;

use std::fmt::Write as _;

use thiserror::Error;

use crate::csvfmt::fmt_real;
use crate::device::DeviceError;
use crate::spectroscopy::SpectroscopyError;

pub use coupling::{
    critical_coupling_search, on_off_ratio, plateau_kappa_max, synthetic_reflection_sweep, CouplingSearch, PlateauPoint,
};
pub use kerr::{fit_kerr, KerrPoint};
pub use least_squares::{least_squares, LmOptions, ResidualModel};
pub use reflection::{fit_reflection, ReflectionModel};
pub use ringdown::{fit_ringdown, fit_ringdown_with, ringdown_shape, RingdownFitOptions, RingdownModel};

#[derive(Debug, Error)]
pub enum FitError {
    #[error("jacobian is singular; a parameter is not identifiable from the data")]
    SingularJacobian,
    #[error("no convergence within {0} iterations")]
    MaxIterations(usize),
    #[error("invalid fit input: {0}")]
    InvalidInput(String),
    #[error("sweep spans {span_linewidths:.2} linewidths; at least 3 are needed")]
    InsufficientSpan { span_linewidths: f64 },
    #[error("reflection shows no resonance (flat response)")]
    FlatResponse,
    #[error("fitted decay and filter rates coincide; the ringdown model is singular")]
    DegenerateRates,
    #[error("only {0} points in the linear Kerr region; need at least 3")]
    InsufficientLinearRegion(usize),
    #[error("bracket [{lo}, {hi}] Φ₀ does not contain critical coupling")]
    BracketError { lo: f64, hi: f64 },
    #[error("no energy plateau of at least 3 contiguous points")]
    NoPlateau,
    #[error(transparent)]
    Device(#[from] DeviceError),
    #[error(transparent)]
    Spectroscopy(#[from] SpectroscopyError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitParameter {
    pub name: String,
    pub value: f64,
    pub std_error: f64,
    pub unit: String,
}

impl FitParameter {
    pub fn new(name: impl Into<String>, value: f64, std_error: f64, unit: impl Into<String>) -> Self {
        Self { name: name.into(), value, std_error, unit: unit.into() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub parameters: Vec<FitParameter>,
    pub residual_norm: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Names of parameters that ended on a bound.
    pub at_bound: Vec<String>,
}

impl FitResult {
    pub fn get(&self, name: &str) -> Option<&FitParameter> {
        self.parameters.iter().find(|p| p.name == name)
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.get(name).map(|p| p.value)
    }

    pub fn std_error(&self, name: &str) -> Option<f64> {
        self.get(name).map(|p| p.std_error)
    }

    pub fn is_at_bound(&self, name: &str) -> bool {
        self.at_bound.iter().any(|n| n == name)
    }

    /// Human-readable table.
    pub fn to_report(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "fit: converged={} iterations={} residual_norm={:.6e}",
            self.converged, self.iterations, self.residual_norm
        );
        let _ = writeln!(s, "uncertainties: one-sigma, from fit covariance");
        for p in &self.parameters {
            let flag = if self.is_at_bound(&p.name) { "  (at bound)" } else { "" };
            let _ = writeln!(s, "  {:<16} {:>24.10e} ± {:<12.4e} {}{}", p.name, p.value, p.std_error, p.unit, flag);
        }
        s
    }

    /// Machine-readable key-value block (valid TOML).
    pub fn to_key_values(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "[fit]");
        let _ = writeln!(s, "converged = {}", self.converged);
        let _ = writeln!(s, "iterations = {}", self.iterations);
        let _ = writeln!(s, "residual_norm = {}", fmt_real(self.residual_norm));
        let _ = writeln!(s, "uncertainty_source = \"fit covariance\"");
        for p in &self.parameters {
            let _ = writeln!(s, "\n[parameters.{}]", p.name);
            let _ = writeln!(s, "value = {}", fmt_real(p.value));
            let _ = writeln!(s, "std_error = {}", fmt_real(p.std_error));
            let _ = writeln!(s, "unit = \"{}\"", p.unit);
            let _ = writeln!(s, "at_bound = {}", self.is_at_bound(&p.name));
        }
        s
    }
}
