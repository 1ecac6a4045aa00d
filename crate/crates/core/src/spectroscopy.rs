//! Steady-state reflection off the coupler port, including the Duffing
//! response of the Kerr-shifted cavity.
//!
//! Convention: Γ = ((κ_int − κ_ext) + 2i(f − f₀)) / ((κ_int + κ_ext) + 2i(f − f₀)),
//! so Γ(f₀) is real and negative when over-coupled.

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use num_complex::Complex64;
use thiserror::Error;

use crate::csvfmt::{fmt_real, parse_row};
use crate::device::{self, BiasPoint, DeviceError, DeviceParams};
use crate::units::PLANCK;

/// Relative tolerance under which two Duffing roots are considered the same.
pub const ROOT_DEDUP_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum SpectroscopyError {
    #[error(transparent)]
    Device(#[from] DeviceError),
    #[error("invalid sweep: {0}")]
    InvalidSweep(String),
    #[error("phase response has no interior maximum of its slope")]
    DegenerateSweep,
    #[error("sweep csv: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SpectroscopyError>;

#[derive(Debug, Clone, PartialEq)]
pub struct FrequencySweep {
    pub frequencies: Vec<f64>,
    pub gammas: Vec<Complex64>,
    /// Incident power, W.
    pub input_power: f64,
    pub bias: BiasPoint,
}

impl FrequencySweep {
    pub fn new(frequencies: Vec<f64>, gammas: Vec<Complex64>, input_power: f64, bias: BiasPoint) -> Result<Self> {
        if frequencies.len() != gammas.len() {
            return Err(SpectroscopyError::InvalidSweep(format!(
                "{} frequencies but {} reflection samples",
                frequencies.len(),
                gammas.len()
            )));
        }
        if frequencies.len() < 2 {
            return Err(SpectroscopyError::InvalidSweep("need at least 2 points".into()));
        }
        if frequencies.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(SpectroscopyError::InvalidSweep("frequencies must be strictly increasing".into()));
        }
        if gammas.iter().any(|g| !(g.re.is_finite() && g.im.is_finite())) {
            return Err(SpectroscopyError::InvalidSweep("non-finite reflection sample".into()));
        }
        Ok(Self { frequencies, gammas, input_power, bias })
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "freq_hz,re_gamma,im_gamma")?;
        for (f, g) in self.frequencies.iter().zip(&self.gammas) {
            writeln!(w, "{},{},{}", fmt_real(*f), fmt_real(g.re), fmt_real(g.im))?;
        }
        Ok(())
    }

    /// Read back a sweep; power and bias are not part of the csv and must be supplied.
    pub fn read_csv<R: BufRead>(r: R, input_power: f64, bias: BiasPoint) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().transpose()?.unwrap_or_default();
        if header.trim() != "freq_hz,re_gamma,im_gamma" {
            return Err(SpectroscopyError::Format(format!("unexpected header `{header}`")));
        }
        let (mut f, mut g) = (Vec::new(), Vec::new());
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            match parse_row(&line).map_err(SpectroscopyError::Format)?.as_slice() {
                [freq, re, im] => {
                    f.push(*freq);
                    g.push(Complex64::new(*re, *im));
                }
                _ => return Err(SpectroscopyError::Format(format!("bad row `{line}`"))),
            }
        }
        Self::new(f, g, input_power, bias)
    }
}

/// Evenly spaced frequency grid, `points ≥ 2`.
pub fn linear_grid(start: f64, stop: f64, points: usize) -> Vec<f64> {
    let step = (stop - start) / (points - 1) as f64;
    (0..points).map(|i| start + i as f64 * step).collect()
}

/// One-port reflection of a linear resonator.
pub fn reflection_from_rates(f0: f64, kappa_int: f64, kappa_ext: f64, frequency: f64) -> Complex64 {
    let d = 2.0 * (frequency - f0);
    Complex64::new(kappa_int - kappa_ext, d) / Complex64::new(kappa_int + kappa_ext, d)
}

pub fn reflection_linear(device: &DeviceParams, bias: BiasPoint, frequency: f64) -> Result<Complex64> {
    let f0 = device::cavity_frequency(device, bias)?;
    let ki = device::internal_loss(device, bias);
    let ke = device::external_coupling(device, bias)?;
    Ok(reflection_from_rates(f0, ki, ke, frequency))
}

/// Steady-state intracavity photon numbers of the driven Kerr cavity.
#[derive(Debug, Clone, PartialEq)]
pub struct DuffingSolution {
    /// Ascending, 1 to 3 entries.
    pub photon_numbers: Vec<f64>,
    pub stable: Vec<bool>,
}

impl DuffingSolution {
    pub fn is_bistable(&self) -> bool {
        self.photon_numbers.len() == 3
    }

    pub fn lowest(&self) -> f64 {
        self.photon_numbers[0]
    }

    pub fn highest(&self) -> f64 {
        *self.photon_numbers.last().unwrap()
    }
}

/// Real roots in ascending order of `u³ + a u² + b u + c`.
fn real_cubic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let shift = -a / 3.0;
    let disc = q * q / 4.0 + p * p * p / 27.0;
    let mut roots = if disc < 0.0 {
        let r = (-p / 3.0).sqrt();
        let arg = (-q / 2.0 / (r * r * r)).clamp(-1.0, 1.0);
        let phi = arg.acos() / 3.0;
        (0..3)
            .map(|k| 2.0 * r * (phi - 2.0 * PI * k as f64 / 3.0).cos() + shift)
            .collect::<Vec<_>>()
    } else {
        let sq = disc.sqrt();
        let t = (-q / 2.0 + sq).cbrt() + (-q / 2.0 - sq).cbrt();
        vec![t + shift]
    };
    let f = |u: f64| ((u + a) * u + b) * u + c;
    let df = |u: f64| (3.0 * u + 2.0 * a) * u + b;
    for u in roots.iter_mut() {
        for _ in 0..8 {
            let d = df(*u);
            if d == 0.0 {
                break;
            }
            let next = *u - f(*u) / d;
            if f(next).abs() < f(*u).abs() {
                *u = next;
            } else {
                break;
            }
        }
    }
    roots.sort_by(f64::total_cmp);
    roots
}

/// Solve `n·[(Δ − K n)² + (κ/2)²] = κ_ext·Φ_in / 2π` for the steady-state photon
/// number `n`, with Δ = f_drive − f_cav and Φ_in the incident photon flux (1/s).
pub fn duffing_steady_states(
    detuning: f64,
    kappa_int: f64,
    kappa_ext: f64,
    kerr: f64,
    drive_photon_flux: f64,
) -> DuffingSolution {
    let kappa = kappa_int + kappa_ext;
    let source = kappa_ext * drive_photon_flux / (2.0 * PI);
    let slope = |n: f64| 3.0 * kerr * kerr * n * n - 4.0 * detuning * kerr * n + detuning * detuning + kappa * kappa / 4.0;
    if source <= 0.0 {
        return DuffingSolution { photon_numbers: vec![0.0], stable: vec![true] };
    }
    let half = kappa / 2.0;
    let mut roots: Vec<f64> = if kerr == 0.0 || half == 0.0 {
        if kerr == 0.0 {
            vec![source / (detuning * detuning + half * half)]
        } else {
            // lossless-ish limit: solve n (Δ − K n)² = S directly in n
            real_cubic_roots(-2.0 * detuning / kerr, detuning * detuning / (kerr * kerr), -source / (kerr * kerr))
        }
    } else {
        // u = K n / (κ/2), δ = Δ / (κ/2):  u³ − 2δu² + (δ² + 1)u − s = 0
        let d = detuning / half;
        let s = source * kerr / (half * half * half);
        real_cubic_roots(-2.0 * d, d * d + 1.0, -s).into_iter().map(|u| u * half / kerr).collect()
    };
    roots.sort_by(f64::total_cmp);
    roots.retain(|n| *n >= 0.0 && n.is_finite());
    roots.dedup_by(|b, a| (*b - *a).abs() <= ROOT_DEDUP_TOL * a.abs().max(b.abs()));
    if roots.is_empty() {
        roots.push(0.0);
    }
    let stable = roots.iter().map(|&n| slope(n) > 0.0).collect();
    DuffingSolution { photon_numbers: roots, stable }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepDirection {
    Up,
    Down,
}

/// Incident photon flux (1/s) carried by `power` watts at `frequency`.
pub fn photon_flux(power: f64, frequency: f64) -> f64 {
    power / (PLANCK * frequency)
}

/// `n = P / (κ ħω)` with κ and ω angular.
pub fn photon_number(input_power: f64, kappa_total: f64, frequency: f64) -> f64 {
    input_power / (2.0 * PI * kappa_total * PLANCK * frequency)
}

/// Rates that fix the steady-state response at one bias.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityRates {
    pub frequency: f64,
    pub kappa_int: f64,
    pub kappa_ext: f64,
    pub kerr: f64,
}

impl CavityRates {
    pub fn at(device: &DeviceParams, bias: BiasPoint) -> Result<Self> {
        Ok(Self {
            frequency: device::cavity_frequency(device, bias)?,
            kappa_int: device::internal_loss(device, bias),
            kappa_ext: device::external_coupling(device, bias)?,
            kerr: device::self_kerr(device, bias)?,
        })
    }

    pub fn steady_states(&self, frequency: f64, input_power: f64) -> DuffingSolution {
        duffing_steady_states(
            frequency - self.frequency,
            self.kappa_int,
            self.kappa_ext,
            self.kerr,
            photon_flux(input_power, frequency),
        )
    }

    /// Γ = 1 − √(2πκ_ext)·a/α_in on the branch holding `photons`.
    pub fn reflection_at(&self, frequency: f64, photons: f64) -> Complex64 {
        let shifted = self.frequency + self.kerr * photons;
        let denom = Complex64::new((self.kappa_int + self.kappa_ext) / 2.0, frequency - shifted);
        Complex64::new(1.0, 0.0) - self.kappa_ext / denom
    }
}

/// Branch a monotone frequency sweep would be on when it reaches a
/// bistable point: an upward sweep rides the branch that already existed
/// below the bistable window, which is the lower branch for a softening
/// (K < 0) resonance and the upper one for a hardening one.
fn hysteresis_branch(solution: &DuffingSolution, kerr: f64, direction: SweepDirection) -> f64 {
    let low_branch = match direction {
        SweepDirection::Up => kerr < 0.0,
        SweepDirection::Down => kerr > 0.0,
    };
    if low_branch {
        solution.lowest()
    } else {
        solution.highest()
    }
}

pub fn reflection_nonlinear(
    device: &DeviceParams,
    bias: BiasPoint,
    frequency: f64,
    input_power: f64,
    direction: SweepDirection,
) -> Result<Complex64> {
    let rates = CavityRates::at(device, bias)?;
    let sol = rates.steady_states(frequency, input_power);
    Ok(rates.reflection_at(frequency, hysteresis_branch(&sol, rates.kerr, direction)))
}

/// A swept nonlinear reflection measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearSweep {
    pub sweep: FrequencySweep,
    pub photons: Vec<f64>,
    /// True when any point of the sweep had three steady states.
    pub bistable: bool,
}

/// Swept measurement following the occupied branch by continuation: the
/// nearest stable root to the previous point is kept until it disappears.
/// `frequencies` must be ascending; a downward sweep visits them in reverse.
pub fn reflection_nonlinear_sweep(
    device: &DeviceParams,
    bias: BiasPoint,
    frequencies: &[f64],
    input_power: f64,
    direction: SweepDirection,
) -> Result<NonlinearSweep> {
    let rates = CavityRates::at(device, bias)?;
    sweep_with_rates(&rates, bias, frequencies, input_power, direction)
}

pub fn sweep_with_rates(
    rates: &CavityRates,
    bias: BiasPoint,
    frequencies: &[f64],
    input_power: f64,
    direction: SweepDirection,
) -> Result<NonlinearSweep> {
    let n = frequencies.len();
    let mut photons = vec![0.0; n];
    let mut bistable = false;
    let mut prev: Option<f64> = None;
    let order: Box<dyn Iterator<Item = usize>> = match direction {
        SweepDirection::Up => Box::new(0..n),
        SweepDirection::Down => Box::new((0..n).rev()),
    };
    for i in order {
        let sol = rates.steady_states(frequencies[i], input_power);
        bistable |= sol.is_bistable();
        let chosen = match prev {
            Some(p) if sol.is_bistable() => sol
                .photon_numbers
                .iter()
                .zip(&sol.stable)
                .filter(|(_, s)| **s)
                .map(|(n, _)| *n)
                .min_by(|a, b| (a - p).abs().total_cmp(&(b - p).abs()))
                .unwrap_or_else(|| sol.lowest()),
            None if sol.is_bistable() => hysteresis_branch(&sol, rates.kerr, direction),
            _ => sol.lowest(),
        };
        photons[i] = chosen;
        prev = Some(chosen);
    }
    let gammas = frequencies.iter().zip(&photons).map(|(f, n)| rates.reflection_at(*f, *n)).collect();
    let sweep = FrequencySweep::new(frequencies.to_vec(), gammas, input_power, bias)?;
    Ok(NonlinearSweep { sweep, photons, bistable })
}

/// Linear-response sweep; `input_power` is only recorded.
pub fn reflection_linear_sweep(
    device: &DeviceParams,
    bias: BiasPoint,
    frequencies: &[f64],
    input_power: f64,
) -> Result<FrequencySweep> {
    let f0 = device::cavity_frequency(device, bias)?;
    let ki = device::internal_loss(device, bias);
    let ke = device::external_coupling(device, bias)?;
    let gammas = frequencies.iter().map(|f| reflection_from_rates(f0, ki, ke, *f)).collect();
    FrequencySweep::new(frequencies.to_vec(), gammas, input_power, bias)
}

/// Unwrapped phase increments between neighbouring samples. Each increment
/// is `arg(Γ_{i+1} Γ_i*)`, so a global phase factor drops out.
pub fn phase_increments(gammas: &[Complex64]) -> Vec<f64> {
    gammas.windows(2).map(|w| (w[1] * w[0].conj()).arg()).collect()
}

/// Frequency at which |∂∠Γ/∂f| peaks, from central differences refined by a
/// parabola through the three samples around the discrete maximum.
pub fn resonance_by_phase_slope(sweep: &FrequencySweep) -> Result<f64> {
    let n = sweep.len();
    if n < 5 {
        return Err(SpectroscopyError::InvalidSweep(format!("need at least 5 points, got {n}")));
    }
    let f = &sweep.frequencies;
    let inc = phase_increments(&sweep.gammas);
    // slope[i] belongs to f[i + 1]
    let g = &sweep.gammas;
    let slope: Vec<f64> = (1..n - 1)
        .map(|i| {
            // a sample sitting exactly on a reflection zero has no phase
            let dphi = if g[i].norm_sqr() == 0.0 { (g[i + 1] * g[i - 1].conj()).arg() } else { inc[i - 1] + inc[i] };
            (dphi / (f[i + 1] - f[i - 1])).abs()
        })
        .collect();
    let (imax, smax) = slope
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, v)| if *v > bv { (i, *v) } else { (bi, bv) });
    if !(smax > 0.0) || imax == 0 || imax == slope.len() - 1 {
        return Err(SpectroscopyError::DegenerateSweep);
    }
    let (y0, y1, y2) = (slope[imax - 1], slope[imax], slope[imax + 1]);
    let centre = f[imax + 1];
    let (x0, x2) = (f[imax] - centre, f[imax + 2] - centre);
    // vertex of the parabola through (x0, y0), (0, y1), (x2, y2)
    let denom = x0 * x2 * (x0 - x2);
    let a = (x2 * (y0 - y1) - x0 * (y2 - y1)) / denom;
    let b = (x0 * x0 * (y2 - y1) - x2 * x2 * (y0 - y1)) / denom;
    if a < 0.0 {
        let vertex = -b / (2.0 * a);
        if vertex >= x0 && vertex <= x2 {
            return Ok(centre + vertex);
        }
    }
    Ok(centre)
}
