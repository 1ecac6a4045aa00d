use super::{FitError, FitParameter, FitResult};

/// One power step of a Kerr measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KerrPoint {
    pub photons: f64,
    /// Resonance shift from the low-power reference, Hz.
    pub shift: f64,
    pub bistable: bool,
    /// Standard error of `shift`; `None` weighs the point uniformly.
    pub sigma: Option<f64>,
}

impl KerrPoint {
    pub fn new(photons: f64, shift: f64, bistable: bool) -> Self {
        Self { photons, shift, bistable, sigma: None }
    }
}

struct Slope {
    value: f64,
    std_error: f64,
    ssr: f64,
}

fn through_origin(points: &[&KerrPoint]) -> Slope {
    let w = |p: &KerrPoint| p.sigma.map_or(1.0, |s| 1.0 / (s * s));
    let snn: f64 = points.iter().map(|p| w(p) * p.photons * p.photons).sum();
    let sny: f64 = points.iter().map(|p| w(p) * p.photons * p.shift).sum();
    let value = sny / snn;
    let ssr: f64 = points.iter().map(|p| w(p) * (p.shift - value * p.photons).powi(2)).sum();
    let dof = (points.len().saturating_sub(1)).max(1) as f64;
    Slope { value, std_error: (ssr / dof / snn).sqrt(), ssr }
}

/// Weighted fit `Δ = K·n` restricted to the linear region `|K̂ n| < κ/4`,
/// with K̂ re-estimated over two passes. Bistable points never enter.
/// Reports `kerr_hz_per_photon`.
pub fn fit_kerr(points: &[KerrPoint], kappa: f64) -> Result<FitResult, FitError> {
    if !(kappa > 0.0) {
        return Err(FitError::InvalidInput(format!("linewidth must be positive, got {kappa}")));
    }
    let candidates: Vec<&KerrPoint> = points
        .iter()
        .filter(|p| !p.bistable && p.photons.is_finite() && p.shift.is_finite() && p.photons > 0.0)
        .collect();
    if candidates.len() < 3 {
        return Err(FitError::InsufficientLinearRegion(candidates.len()));
    }
    let mut estimate = through_origin(&candidates);
    for _ in 0..2 {
        let selected: Vec<&KerrPoint> = candidates
            .iter()
            .copied()
            .filter(|p| (estimate.value * p.photons).abs() < kappa / 4.0)
            .collect();
        if selected.len() < 3 {
            return Err(FitError::InsufficientLinearRegion(selected.len()));
        }
        estimate = through_origin(&selected);
    }
    Ok(FitResult {
        parameters: vec![FitParameter::new("kerr_hz_per_photon", estimate.value, estimate.std_error, "Hz/photon")],
        residual_norm: estimate.ssr.sqrt(),
        converged: true,
        iterations: 3,
        at_bound: Vec::new(),
    })
}
