use super::{fit_reflection, FitError, FitResult};
use crate::device::{self, BiasPoint, DeviceParams};
use crate::spectroscopy::{linear_grid, reflection_linear_sweep, FrequencySweep};
use crate::units::PLANCK;

/// Synthetic linear reflection sweep at `bias`: `points` samples spanning
/// ±`half_span` linewidths about the resonance, driven at the power that
/// holds `photons` on resonance.
pub fn synthetic_reflection_sweep(
    device: &DeviceParams,
    bias: BiasPoint,
    half_span: f64,
    points: usize,
    photons: f64,
) -> Result<FrequencySweep, FitError> {
    let f0 = device::cavity_frequency(device, bias)?;
    let kappa = device::kappa_total(device, bias)?;
    let grid = linear_grid(f0 - half_span * kappa, f0 + half_span * kappa, points);
    let power = photons * 2.0 * std::f64::consts::PI * kappa * PLANCK * f0;
    Ok(reflection_linear_sweep(device, bias, &grid, power)?)
}

/// Outcome of the search for the critically coupled bias.
#[derive(Debug, Clone)]
pub struct CouplingSearch {
    pub bias: BiasPoint,
    /// Reflection fit at `bias`.
    pub fit: FitResult,
    pub evaluations: usize,
}

const SWEEP_HALF_SPAN: f64 = 5.0;
const SWEEP_POINTS: usize = 401;
const SWEEP_PHOTONS: f64 = 1000.0;

fn fit_at(device: &DeviceParams, bias: BiasPoint) -> Result<FitResult, FitError> {
    let sweep = synthetic_reflection_sweep(device, bias, SWEEP_HALF_SPAN, SWEEP_POINTS, SWEEP_PHOTONS)?;
    fit_reflection(&sweep)
}

fn value(fit: &FitResult, name: &str) -> f64 {
    fit.value(name).unwrap_or(f64::NAN)
}

/// Golden-section search on the gradiometric flux over `[lo, hi]` Φ₀
/// minimizing the fitted |Γ_min|. The low end must be under-coupled and
/// the high end over-coupled.
pub fn critical_coupling_search(device: &DeviceParams, lo: f64, hi: f64, tol: f64) -> Result<CouplingSearch, FitError> {
    if !(lo < hi) || !(tol > 0.0) {
        return Err(FitError::InvalidInput(format!("bad bracket [{lo}, {hi}] or tolerance {tol}")));
    }
    let op = device.operating_point;
    let under = |fit: &FitResult| value(fit, "kappa_ext") < value(fit, "kappa_int");
    let bracket_error = || FitError::BracketError { lo, hi };
    let f_lo = fit_at(device, op.at(lo)).map_err(|_| bracket_error())?;
    let f_hi = fit_at(device, op.at(hi)).map_err(|_| bracket_error())?;
    if !under(&f_lo) || under(&f_hi) {
        return Err(bracket_error());
    }
    let mut evaluations = 2;
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = fit_at(device, op.at(c))?;
    let mut fd = fit_at(device, op.at(d))?;
    evaluations += 2;
    while b - a > tol {
        if value(&fc, "min_reflection") < value(&fd, "min_reflection") {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = fit_at(device, op.at(c))?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = fit_at(device, op.at(d))?;
        }
        evaluations += 1;
    }
    let (bias, fit) = if value(&fc, "min_reflection") < value(&fd, "min_reflection") { (c, fc) } else { (d, fd) };
    Ok(CouplingSearch { bias: op.at(bias), fit, evaluations })
}

/// Dynamic range of the coupler, κ_max/κ_int.
pub fn on_off_ratio(kappa_max: f64, kappa_int: f64) -> f64 {
    kappa_max / kappa_int
}

/// One row of a ringdown bias sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlateauPoint {
    pub bias: f64,
    /// Fitted total linewidth, Hz.
    pub kappa: f64,
    /// Measured energy, photons.
    pub energy: f64,
}

/// Largest fitted linewidth inside the energy plateau, minus `kappa_int`.
/// The plateau is the contiguous run of rows around the energy maximum
/// whose energy stays at or above `threshold` times that maximum.
pub fn plateau_kappa_max(rows: &[PlateauPoint], kappa_int: f64, threshold: f64) -> Result<f64, FitError> {
    let finite: Vec<&PlateauPoint> = rows.iter().filter(|r| r.energy.is_finite() && r.kappa.is_finite()).collect();
    let Some(imax) = (0..finite.len()).max_by(|&i, &j| finite[i].energy.total_cmp(&finite[j].energy)) else {
        return Err(FitError::NoPlateau);
    };
    let floor = threshold * finite[imax].energy;
    let mut start = imax;
    while start > 0 && finite[start - 1].energy >= floor {
        start -= 1;
    }
    let mut end = imax;
    while end + 1 < finite.len() && finite[end + 1].energy >= floor {
        end += 1;
    }
    if end - start + 1 < 3 {
        return Err(FitError::NoPlateau);
    }
    let kmax = finite[start..=end].iter().map(|r| r.kappa).fold(f64::NEG_INFINITY, f64::max);
    Ok(kmax - kappa_int)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(bias: f64, kappa: f64, energy: f64) -> PlateauPoint {
        PlateauPoint { bias, kappa, energy }
    }

    #[test]
    fn plateau_excludes_energy_drop() {
        let rows = [
            row(0.01, 1e4, 5000.0),
            row(0.05, 5e5, 7900.0),
            row(0.08, 1.2e6, 7950.0),
            row(0.10, 1.96e6, 7990.0),
            row(0.12, 3e6, 6000.0),
        ];
        assert_eq!(plateau_kappa_max(&rows, 1.73e3, 0.95).unwrap(), 1.96e6 - 1.73e3);
    }

    #[test]
    fn short_plateau_rejected() {
        let rows = [row(0.0, 1.0, 1.0), row(0.1, 2.0, 10.0), row(0.2, 3.0, 1.0)];
        assert!(matches!(plateau_kappa_max(&rows, 0.0, 0.95), Err(FitError::NoPlateau)));
    }

    #[test]
    fn ratio() {
        assert!((on_off_ratio(1.96e6, 1.73e3) - 1132.9).abs() < 0.1);
        assert_eq!(on_off_ratio(5.0, 5.0), 1.0);
    }
}
