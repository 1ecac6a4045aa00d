use num_complex::Complex64;

use super::least_squares::{solve, LmOptions, ResidualModel};
use super::{FitError, FitParameter, FitResult};
use crate::spectroscopy::{phase_increments, FrequencySweep};

const PARAM_NAMES: [&str; 5] = ["f0", "kappa_int", "kappa_ext", "prefactor_re", "prefactor_im"];

/// Complex one-port model `c·((κi − κe) + 2iΔ)/((κi + κe) + 2iΔ)` in scaled
/// coordinates: frequencies and rates are divided by a reference width and
/// measured from a reference center, which keeps the Jacobian well
/// conditioned at GHz carrier frequencies.
#[derive(Debug, Clone)]
pub struct ReflectionModel {
    center: f64,
    width: f64,
    offsets: Vec<f64>,
    data: Vec<Complex64>,
}

impl ReflectionModel {
    pub fn new(sweep: &FrequencySweep, center: f64, width: f64) -> Self {
        Self {
            center,
            width,
            offsets: sweep.frequencies.iter().map(|f| (f - center) / width).collect(),
            data: sweep.gammas.clone(),
        }
    }

    /// Physical parameters `[f0, κi, κe, Re c, Im c]` from scaled ones.
    pub fn unscale(&self, x: &[f64]) -> [f64; 5] {
        [self.center + self.width * x[0], self.width * x[1], self.width * x[2], x[3], x[4]]
    }

    pub fn scale(&self, p: &[f64; 5]) -> Vec<f64> {
        vec![(p[0] - self.center) / self.width, p[1] / self.width, p[2] / self.width, p[3], p[4]]
    }

    fn gamma(x: &[f64], u: f64) -> Complex64 {
        let d = 2.0 * (u - x[0]);
        Complex64::new(x[3], x[4]) * Complex64::new(x[1] - x[2], d) / Complex64::new(x[1] + x[2], d)
    }
}

impl ResidualModel for ReflectionModel {
    fn n_params(&self) -> usize {
        5
    }

    fn n_residuals(&self) -> usize {
        2 * self.data.len()
    }

    fn residuals(&self, x: &[f64], out: &mut [f64]) {
        for (i, (u, g)) in self.offsets.iter().zip(&self.data).enumerate() {
            let r = Self::gamma(x, *u) - g;
            out[2 * i] = r.re;
            out[2 * i + 1] = r.im;
        }
    }

    fn param_names(&self) -> Vec<String> {
        PARAM_NAMES.iter().map(|s| s.to_string()).collect()
    }
}

struct Guess {
    center: f64,
    width: f64,
    depth_ratio: f64,
    over_coupled: bool,
}

fn initial_guess(sweep: &FrequencySweep) -> Result<Guess, FitError> {
    let f = &sweep.frequencies;
    let g = &sweep.gammas;
    let n = f.len();
    let baseline = 0.5 * (g[0].norm() + g[n - 1].norm());
    if !(baseline > 0.0) {
        return Err(FitError::FlatResponse);
    }
    // dip profile 1 − |Γ/c|² is a Lorentzian of FWHM κ
    let dip: Vec<f64> = g.iter().map(|z| 1.0 - (z.norm() / baseline).powi(2)).collect();
    let (imin, dmax) = dip
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, d)| if *d > acc.1 { (i, *d) } else { acc });
    if !(dmax > 1e-9) {
        return Err(FitError::FlatResponse);
    }
    let half = 0.5 * dmax;
    let crossing = |range: &mut dyn Iterator<Item = usize>| -> Option<f64> {
        let mut prev = imin;
        for i in range {
            if dip[i] < half {
                let t = (dip[prev] - half) / (dip[prev] - dip[i]);
                return Some(f[prev] + t * (f[i] - f[prev]));
            }
            prev = i;
        }
        None
    };
    let lo = crossing(&mut (0..imin).rev());
    let hi = crossing(&mut (imin + 1..n));
    let step = (f[n - 1] - f[0]) / (n - 1) as f64;
    let width = match (lo, hi) {
        (Some(a), Some(b)) => b - a,
        (Some(a), None) => 2.0 * (f[imin] - a),
        (None, Some(b)) => 2.0 * (b - f[imin]),
        (None, None) => f[n - 1] - f[0],
    }
    .max(step);
    let winding: f64 = phase_increments(g).iter().sum();
    Ok(Guess {
        center: f[imin],
        width,
        depth_ratio: (1.0 - dmax).max(0.0).sqrt(),
        over_coupled: winding.abs() > std::f64::consts::PI,
    })
}

/// Fit the complex reflection of a linear resonator. Reports `f0`,
/// `kappa_int`, `kappa_ext`, their sum `kappa`, and `min_reflection`
/// = |κi − κe|/κ, plus the complex cable prefactor.
pub fn fit_reflection(sweep: &FrequencySweep) -> Result<FitResult, FitError> {
    if sweep.len() < 6 {
        return Err(FitError::InvalidInput(format!("need at least 6 points, got {}", sweep.len())));
    }
    let guess = initial_guess(sweep)?;
    let span = sweep.frequencies[sweep.len() - 1] - sweep.frequencies[0];
    if span < 3.0 * guess.width {
        return Err(FitError::InsufficientSpan { span_linewidths: span / guess.width });
    }
    let model = ReflectionModel::new(sweep, guess.center, guess.width);
    let (mut ki, mut ke) = (0.5 * (1.0 + guess.depth_ratio), 0.5 * (1.0 - guess.depth_ratio));
    if guess.over_coupled {
        std::mem::swap(&mut ki, &mut ke);
    }
    // prefactor from the two ends of the sweep
    let x_partial = [0.0, ki, ke, 1.0, 0.0];
    let n = sweep.len();
    let c = 0.5
        * (sweep.gammas[0] / ReflectionModel::gamma(&x_partial, model.offsets[0])
            + sweep.gammas[n - 1] / ReflectionModel::gamma(&x_partial, model.offsets[n - 1]));
    let initial = [0.0, ki, ke, c.re, c.im];
    let opts = LmOptions {
        lower: Some(vec![f64::NEG_INFINITY, 0.0, 0.0, f64::NEG_INFINITY, f64::NEG_INFINITY]),
        ..LmOptions::default()
    };
    let sol = solve(&model, &initial, &opts)?;
    let x = &sol.params;
    let w = model.width;
    let p = model.unscale(x);
    let kappa = p[1] + p[2];
    let diff = x[1] - x[2];
    let k = x[1] + x[2];
    let min_gamma = diff.abs() / k;
    let s = diff.signum();
    let grad_min = [0.0, s / k - diff.abs() / (k * k), -s / k - diff.abs() / (k * k), 0.0, 0.0];

    let names = model.param_names();
    let mut parameters = vec![
        FitParameter::new("f0", p[0], w * sol.std_error(0), "Hz"),
        FitParameter::new("kappa_int", p[1], w * sol.std_error(1), "Hz"),
        FitParameter::new("kappa_ext", p[2], w * sol.std_error(2), "Hz"),
        FitParameter::new("kappa", kappa, w * sol.propagate(&[0.0, 1.0, 1.0, 0.0, 0.0]), "Hz"),
        FitParameter::new("min_reflection", min_gamma, sol.propagate(&grad_min), ""),
    ];
    parameters.push(FitParameter::new("prefactor_re", p[3], sol.std_error(3), ""));
    parameters.push(FitParameter::new("prefactor_im", p[4], sol.std_error(4), ""));
    Ok(FitResult {
        parameters,
        residual_norm: sol.residual_norm,
        converged: sol.converged,
        iterations: sol.iterations,
        at_bound: sol
            .at_bound
            .iter()
            .zip(names)
            .filter(|(b, _)| **b)
            .map(|(_, n)| n)
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::BiasPoint;
    use crate::spectroscopy::{linear_grid, reflection_from_rates};

    fn sweep(f0: f64, ki: f64, ke: f64, span: f64, prefactor: Complex64) -> FrequencySweep {
        let fs = linear_grid(f0 - span / 2.0, f0 + span / 2.0, 401);
        let gs = fs.iter().map(|f| prefactor * reflection_from_rates(f0, ki, ke, *f)).collect();
        FrequencySweep::new(fs, gs, 1e-15, BiasPoint::new(0.25, 0.0)).unwrap()
    }

    #[test]
    fn recovers_under_and_over_coupled() {
        for (ki, ke) in [(1730.0, 500.0), (1730.0, 3460.0), (1730.0, 1730.0)] {
            let s = sweep(5.77e9 + 123.0, ki, ke, 10.0 * (ki + ke), Complex64::from_polar(0.8, 1.1));
            let fit = fit_reflection(&s).unwrap();
            assert!(fit.converged);
            assert!((fit.value("kappa_int").unwrap() / ki - 1.0).abs() < 1e-6);
            assert!((fit.value("kappa_ext").unwrap() / ke - 1.0).abs() < 1e-6);
            assert!((fit.value("f0").unwrap() - (5.77e9 + 123.0)).abs() < 1e-6 * ki);
        }
    }

    #[test]
    fn over_coupled_two_to_one() {
        let s = sweep(6e9, 1000.0, 2000.0, 30_000.0, Complex64::new(1.0, 0.0));
        let fit = fit_reflection(&s).unwrap();
        assert!((fit.value("min_reflection").unwrap() - 1.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn narrow_sweep_rejected() {
        let s = sweep(6e9, 1000.0, 1000.0, 3000.0, Complex64::new(1.0, 0.0));
        assert!(matches!(fit_reflection(&s), Err(FitError::InsufficientSpan { .. })));
    }

    #[test]
    fn uncoupled_is_flat() {
        let s = sweep(6e9, 1000.0, 0.0, 20_000.0, Complex64::new(1.0, 0.0));
        assert!(matches!(fit_reflection(&s), Err(FitError::FlatResponse)));
    }
}
