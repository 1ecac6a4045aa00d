use std::f64::consts::PI;

use super::least_squares::{solve, LmOptions, ResidualModel};
use super::{FitError, FitParameter, FitResult};
use crate::trace::RealTrace;

const T_SCALE: f64 = 1e-9;
const A_SCALE: f64 = 1e6;
const G_SCALE: f64 = 1e9;

/// Low-pass-filtered exponential decay switched on at `t0`:
/// `A·g·(e^{−aτ} − e^{−gτ})/(g − a)` for τ = t − t0 > 0, zero before.
/// `a` is the amplitude decay rate and `g` the filter rate, both angular.
/// The expression is symmetric in the two rates and tends to `A·g·τ·e^{−aτ}`
/// when they coincide.
pub fn ringdown_shape(tau: f64, amplitude: f64, a: f64, g: f64) -> f64 {
    if tau <= 0.0 {
        return 0.0;
    }
    let d = (g - a).abs();
    let slow = a.min(g);
    let core = if d == 0.0 { tau } else { -(-d * tau).exp_m1() / d };
    amplitude * g * (-slow * tau).exp() * core
}

/// Residuals of [`ringdown_shape`] against a sampled trace, in scaled
/// parameters `[t0/ns, a·µs, g·ns, A/V_max]`.
#[derive(Debug, Clone)]
pub struct RingdownModel {
    times: Vec<f64>,
    data: Vec<f64>,
    v_scale: f64,
}

impl RingdownModel {
    pub fn new(trace: &RealTrace) -> Self {
        let v_scale = trace.samples().iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        Self { times: trace.times().collect(), data: trace.samples().iter().map(|v| v / v_scale).collect(), v_scale }
    }

    /// `[t0 (s), a (1/s), g (1/s), A (V)]` from scaled parameters.
    pub fn unscale(&self, x: &[f64]) -> [f64; 4] {
        [x[0] * T_SCALE, x[1] * A_SCALE, x[2] * G_SCALE, x[3] * self.v_scale]
    }

    pub fn scale(&self, p: &[f64; 4]) -> Vec<f64> {
        vec![p[0] / T_SCALE, p[1] / A_SCALE, p[2] / G_SCALE, p[3] / self.v_scale]
    }
}

impl ResidualModel for RingdownModel {
    fn n_params(&self) -> usize {
        4
    }

    fn n_residuals(&self) -> usize {
        self.data.len()
    }

    fn residuals(&self, x: &[f64], out: &mut [f64]) {
        let [t0, a, g, _] = self.unscale(x);
        for ((o, t), v) in out.iter_mut().zip(&self.times).zip(&self.data) {
            *o = ringdown_shape(t - t0, x[3], a, g) - v;
        }
    }

    fn param_names(&self) -> Vec<String> {
        ["t0", "decay_rate", "filter_rate", "amplitude"].iter().map(|s| s.to_string()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RingdownFitOptions {
    /// Expected filter corner, Hz; seeds the fast rate.
    pub nominal_corner: f64,
    /// Samples below this fraction of the peak are ignored when seeding the decay rate.
    pub tail_floor: f64,
}

impl Default for RingdownFitOptions {
    fn default() -> Self {
        Self { nominal_corner: 50e6, tail_floor: 1e-3 }
    }
}

pub fn fit_ringdown(trace: &RealTrace) -> Result<FitResult, FitError> {
    fit_ringdown_with(trace, &RingdownFitOptions::default())
}

/// Fit a filtered ringdown. Reports `t0` (s), `kappa` (energy linewidth, Hz,
/// equal to the amplitude rate over π), `gamma_c` (filter corner, Hz) and
/// `amplitude` (V, unfiltered onset).
pub fn fit_ringdown_with(trace: &RealTrace, opts: &RingdownFitOptions) -> Result<FitResult, FitError> {
    let n = trace.len();
    if n < 8 {
        return Err(FitError::InvalidInput(format!("need at least 8 samples, got {n}")));
    }
    let v = trace.samples();
    let peak = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if !(peak > 0.0) {
        return Err(FitError::InvalidInput("trace is identically zero".into()));
    }
    let dt = trace.dt;
    let k_edge = (0..n - 1)
        .max_by(|&i, &j| (v[i + 1] - v[i]).total_cmp(&(v[j + 1] - v[j])))
        .unwrap();
    let t0 = trace.time(k_edge);
    let g0 = (2.0 * PI * opts.nominal_corner).min(0.5 * PI / dt);

    // log-linear regression on the tail, after the filter has settled
    let settle = t0 + 5.0 / g0;
    let (mut sx, mut sy, mut sxx, mut sxy, mut m) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (i, val) in v.iter().enumerate() {
        let t = trace.time(i);
        if t > settle && *val > opts.tail_floor * peak {
            let (x, y) = (t - t0, val.ln());
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            m += 1.0;
        }
    }
    if m < 3.0 {
        return Err(FitError::InvalidInput("no decaying tail after the rising edge".into()));
    }
    let slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    let a0 = (-slope).max(1e-3 / (trace.end_time() - t0));
    if a0 * (trace.end_time() - t0) < 3.0 {
        return Err(FitError::InvalidInput("trace covers fewer than 3 decay constants".into()));
    }
    let intercept = (sy - slope * sx) / m;
    let amp0 = intercept.exp() * (g0 - a0).abs().max(a0 * 1e-3) / g0;

    let model = RingdownModel::new(trace);
    let initial = model.scale(&[t0, a0, g0, amp0]);
    let g_max = PI / dt;
    let lm = LmOptions {
        lower: Some(vec![f64::NEG_INFINITY, 0.0, 0.0, 0.0]),
        upper: Some(vec![f64::INFINITY, f64::INFINITY, g_max / G_SCALE, f64::INFINITY]),
        ..LmOptions::default()
    };
    let sol = solve(&model, &initial, &lm)?;
    let [t0, a, g, amp] = model.unscale(&sol.params);
    if (g - a).abs() / g < 1e-6 {
        return Err(FitError::DegenerateRates);
    }
    let names = model.param_names();
    let parameters = vec![
        FitParameter::new("t0", t0, T_SCALE * sol.std_error(0), "s"),
        FitParameter::new("kappa", a / PI, A_SCALE / PI * sol.std_error(1), "Hz"),
        FitParameter::new("gamma_c", g / (2.0 * PI), G_SCALE / (2.0 * PI) * sol.std_error(2), "Hz"),
        FitParameter::new("amplitude", amp, model.v_scale * sol.std_error(3), "V"),
    ];
    let reported = ["t0", "kappa", "gamma_c", "amplitude"];
    Ok(FitResult {
        parameters,
        residual_norm: sol.residual_norm * model.v_scale,
        converged: sol.converged,
        iterations: sol.iterations,
        at_bound: sol
            .at_bound
            .iter()
            .zip(names.iter().zip(reported))
            .filter(|(b, _)| **b)
            .map(|(_, (_, r))| r.to_string())
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(kappa: f64, gamma_c: f64, t0: f64, dt: f64, len: usize) -> RealTrace {
        let a = PI * kappa;
        let g = 2.0 * PI * gamma_c;
        let samples = (0..len).map(|i| ringdown_shape(-20e-9 + i as f64 * dt - t0, 1e-6, a, g)).collect();
        RealTrace::new(-20e-9, dt, samples).unwrap()
    }

    #[test]
    fn shape_is_symmetric_and_continuous() {
        let (a, g) = (3e6, 3e8);
        for tau in [1e-9, 1e-8, 1e-7] {
            let lhs = ringdown_shape(tau, 1.0, a, g) / g;
            let rhs = ringdown_shape(tau, 1.0, g, a) / a;
            assert!((lhs / rhs - 1.0).abs() < 1e-12);
            let near = ringdown_shape(tau, 1.0, a, a * (1.0 + 1e-9));
            let equal = ringdown_shape(tau, 1.0, a, a);
            assert!((near / equal - 1.0).abs() < 1e-6);
        }
        assert_eq!(ringdown_shape(0.0, 1.0, a, g), 0.0);
    }

    #[test]
    fn recovers_fast_ringdown() {
        let tr = synthetic(1.96e6, 48e6, 0.3e-9, 1e-9, 1000);
        let fit = fit_ringdown(&tr).unwrap();
        assert!((fit.value("kappa").unwrap() / 1.96e6 - 1.0).abs() < 1e-4, "{}", fit.to_report());
        assert!((fit.value("gamma_c").unwrap() / 48e6 - 1.0).abs() < 1e-3, "{}", fit.to_report());
    }
}
