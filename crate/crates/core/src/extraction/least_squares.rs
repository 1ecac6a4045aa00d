//! Damped Gauss–Newton (Levenberg–Marquardt) with forward-difference Jacobians.

use nalgebra::{DMatrix, DVector};

use super::{FitError, FitParameter, FitResult};

/// Relative forward-difference step.
pub const FD_REL_STEP: f64 = 1e-6;

/// Residual vector of a parametric model against fixed data.
pub trait ResidualModel: Sync {
    fn n_params(&self) -> usize;
    fn n_residuals(&self) -> usize;
    fn residuals(&self, params: &[f64], out: &mut [f64]);

    fn param_names(&self) -> Vec<String> {
        (0..self.n_params()).map(|i| format!("p{i}")).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmOptions {
    pub max_iterations: usize,
    pub initial_damping: f64,
    /// Damping is multiplied by this on a rejected step and divided on an accepted one.
    pub damping_factor: f64,
    /// Converged when an accepted step lowers the cost by less than this fraction.
    pub cost_tol: f64,
    /// Converged when the step is shorter than this relative to |x|.
    pub step_tol: f64,
    pub lower: Option<Vec<f64>>,
    pub upper: Option<Vec<f64>>,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            initial_damping: 1e-3,
            damping_factor: 3.0,
            cost_tol: 1e-10,
            step_tol: 1e-12,
            lower: None,
            upper: None,
        }
    }
}

/// Raw engine output in the model's own parameterization.
#[derive(Debug, Clone)]
pub struct Solution {
    pub params: Vec<f64>,
    /// Parameter covariance; rows/columns of parameters pinned at a bound are zero.
    pub covariance: DMatrix<f64>,
    pub residual_norm: f64,
    pub converged: bool,
    pub iterations: usize,
    pub at_bound: Vec<bool>,
    pub n_residuals: usize,
}

impl Solution {
    pub fn std_error(&self, i: usize) -> f64 {
        self.covariance[(i, i)].max(0.0).sqrt()
    }

    /// Standard error of `Σ gᵢ xᵢ` (first-order propagation).
    pub fn propagate(&self, gradient: &[f64]) -> f64 {
        let g = DVector::from_column_slice(gradient);
        (g.transpose() * &self.covariance * &g)[(0, 0)].max(0.0).sqrt()
    }
}

fn fd_step(x: f64) -> f64 {
    FD_REL_STEP * x.abs().max(1e-3)
}

fn eval(model: &dyn ResidualModel, x: &[f64]) -> Vec<f64> {
    let mut r = vec![0.0; model.n_residuals()];
    model.residuals(x, &mut r);
    r
}

/// Forward-difference Jacobian, `m × n`.
pub fn forward_jacobian(model: &dyn ResidualModel, x: &[f64], r0: &[f64]) -> DMatrix<f64> {
    let (m, n) = (model.n_residuals(), model.n_params());
    let mut jac = DMatrix::zeros(m, n);
    let mut xp = x.to_vec();
    let mut r = vec![0.0; m];
    for j in 0..n {
        let h = fd_step(x[j]);
        xp[j] = x[j] + h;
        let h = xp[j] - x[j];
        model.residuals(&xp, &mut r);
        for i in 0..m {
            jac[(i, j)] = (r[i] - r0[i]) / h;
        }
        xp[j] = x[j];
    }
    jac
}

/// Central-difference Jacobian, used to cross-check the forward one.
pub fn central_jacobian(model: &dyn ResidualModel, x: &[f64]) -> DMatrix<f64> {
    let (m, n) = (model.n_residuals(), model.n_params());
    let mut jac = DMatrix::zeros(m, n);
    let mut xp = x.to_vec();
    let (mut rp, mut rm) = (vec![0.0; m], vec![0.0; m]);
    for j in 0..n {
        let h = fd_step(x[j]);
        xp[j] = x[j] + h;
        model.residuals(&xp, &mut rp);
        xp[j] = x[j] - h;
        model.residuals(&xp, &mut rm);
        for i in 0..m {
            jac[(i, j)] = (rp[i] - rm[i]) / (2.0 * h);
        }
        xp[j] = x[j];
    }
    jac
}

fn project(x: &mut [f64], opts: &LmOptions) {
    if let Some(lo) = &opts.lower {
        for (v, l) in x.iter_mut().zip(lo) {
            *v = v.max(*l);
        }
    }
    if let Some(hi) = &opts.upper {
        for (v, h) in x.iter_mut().zip(hi) {
            *v = v.min(*h);
        }
    }
}

fn bound_flags(x: &[f64], opts: &LmOptions) -> Vec<bool> {
    (0..x.len())
        .map(|i| {
            opts.lower.as_ref().is_some_and(|l| x[i] <= l[i]) || opts.upper.as_ref().is_some_and(|u| x[i] >= u[i])
        })
        .collect()
}

fn half_sq(r: &[f64]) -> f64 {
    0.5 * r.iter().map(|v| v * v).sum::<f64>()
}

/// Minimize ½‖r(x)‖² from `initial`.
pub fn solve(model: &dyn ResidualModel, initial: &[f64], opts: &LmOptions) -> Result<Solution, FitError> {
    let (m, n) = (model.n_residuals(), model.n_params());
    if initial.len() != n {
        return Err(FitError::InvalidInput(format!("expected {n} initial values, got {}", initial.len())));
    }
    if m < n {
        return Err(FitError::InvalidInput(format!("{m} residuals cannot determine {n} parameters")));
    }
    if initial.iter().any(|v| !v.is_finite()) {
        return Err(FitError::InvalidInput("initial guess must be finite".into()));
    }
    let mut x = initial.to_vec();
    project(&mut x, opts);
    let mut r = eval(model, &x);
    let mut cost = half_sq(&r);
    if !cost.is_finite() {
        return Err(FitError::InvalidInput("model is not finite at the initial guess".into()));
    }
    let mut lambda = opts.initial_damping;
    let mut converged = false;
    let mut iterations = 0;

    'outer: while iterations < opts.max_iterations {
        iterations += 1;
        if cost == 0.0 {
            converged = true;
            break;
        }
        let jac = forward_jacobian(model, &x, &r);
        let jtj = jac.transpose() * &jac;
        let grad = jac.transpose() * DVector::from_column_slice(&r);
        let free = bound_flags(&x, opts);
        if (0..n).any(|j| jtj[(j, j)] == 0.0 && !free[j]) {
            return Err(FitError::SingularJacobian);
        }
        loop {
            let mut a = jtj.clone();
            for j in 0..n {
                a[(j, j)] += lambda * jtj[(j, j)].max(f64::MIN_POSITIVE);
            }
            let Some(chol) = a.cholesky() else {
                lambda *= opts.damping_factor;
                if lambda > 1e32 {
                    return Err(FitError::SingularJacobian);
                }
                continue;
            };
            let delta = chol.solve(&(-&grad));
            let mut trial: Vec<f64> = x.iter().zip(delta.iter()).map(|(a, b)| a + b).collect();
            project(&mut trial, opts);
            let step: f64 = trial.iter().zip(&x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let xnorm: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            if step <= opts.step_tol * (xnorm + opts.step_tol) {
                converged = true;
                break 'outer;
            }
            let r_new = eval(model, &trial);
            let cost_new = half_sq(&r_new);
            if cost_new.is_finite() && cost_new < cost {
                let rel = (cost - cost_new) / cost;
                x = trial;
                r = r_new;
                cost = cost_new;
                lambda = (lambda / opts.damping_factor).max(1e-15);
                if rel < opts.cost_tol {
                    converged = true;
                    break 'outer;
                }
                break;
            }
            lambda *= opts.damping_factor;
        }
    }

    let at_bound = bound_flags(&x, opts);
    let jac = forward_jacobian(model, &x, &r);
    let covariance = covariance(&jac, &at_bound, 2.0 * cost, m)?;
    Ok(Solution {
        params: x,
        covariance,
        residual_norm: (2.0 * cost).sqrt(),
        converged,
        iterations,
        at_bound,
        n_residuals: m,
    })
}

fn covariance(jac: &DMatrix<f64>, pinned: &[bool], ssr: f64, m: usize) -> Result<DMatrix<f64>, FitError> {
    let n = jac.ncols();
    let free: Vec<usize> = (0..n).filter(|j| !pinned[*j]).collect();
    let mut cov = DMatrix::zeros(n, n);
    if free.is_empty() {
        return Ok(cov);
    }
    let sub = jac.select_columns(free.iter());
    let jtj = sub.transpose() * &sub;
    // scale to unit diagonal before inverting
    let d: Vec<f64> = (0..free.len()).map(|j| jtj[(j, j)].sqrt()).collect();
    if d.iter().any(|v| !(*v > 0.0)) {
        return Err(FitError::SingularJacobian);
    }
    let scaled = DMatrix::from_fn(free.len(), free.len(), |i, j| jtj[(i, j)] / (d[i] * d[j]));
    let inv = scaled.try_inverse().ok_or(FitError::SingularJacobian)?;
    let dof = (m.saturating_sub(free.len())).max(1) as f64;
    let s2 = ssr / dof;
    for (a, &i) in free.iter().enumerate() {
        for (b, &j) in free.iter().enumerate() {
            cov[(i, j)] = inv[(a, b)] / (d[a] * d[b]) * s2;
        }
    }
    Ok(cov)
}

/// Fit `model` from `initial` and report its parameters under the model's names.
pub fn least_squares(model: &dyn ResidualModel, initial: &[f64], opts: &LmOptions) -> Result<FitResult, FitError> {
    let sol = solve(model, initial, opts)?;
    let parameters = model
        .param_names()
        .into_iter()
        .enumerate()
        .map(|(i, name)| FitParameter::new(name, sol.params[i], sol.std_error(i), ""))
        .collect();
    Ok(FitResult {
        parameters,
        residual_norm: sol.residual_norm,
        converged: sol.converged,
        iterations: sol.iterations,
        at_bound: sol
            .at_bound
            .iter()
            .enumerate()
            .filter(|(_, b)| **b)
            .map(|(i, _)| model.param_names()[i].clone())
            .collect(),
    })
}
