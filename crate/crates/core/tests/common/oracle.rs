//! Independent oracles: Fock-space diagonalization for the self-Kerr and
//! brute-force bracketing for the driven Kerr steady states.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};

use tibsim::device::BiasPoint;

const H: f64 = 6.626_070_15e-34;
const E: f64 = 1.602_176_634e-19;

/// Circuit quantities recomputed from scratch, then the Kerr read off the
/// lowest three levels of `f·n + Σ (−E_J φ⁴/24)(a + a†)⁴` (in Hz).
pub fn fock_kerr(f_bare: f64, p: f64, n: u32, ic: f64, bias: BiasPoint, levels: usize) -> f64 {
    let phi0 = H / (2.0 * E);
    let hbar = H / (2.0 * PI);
    let l_sq = |flux: f64| phi0 / (2.0 * PI * ic * (PI * flux).cos().abs());
    let nf = n as f64;
    let la = nf * l_sq(bias.uniform + bias.gradiometric);
    let lb = nf * l_sq(bias.uniform - bias.gradiometric);
    let l_ref = nf * l_sq(bias.uniform);
    let l_bridge = 0.5 * (la + lb);
    let f = f_bare / (1.0 + p * (l_bridge / l_ref - 1.0)).sqrt();
    let omega = 2.0 * PI * f;
    // zero-point flux of the whole mode, the bridge's share of it, and the
    // share of each SQUID in series along one bridge path
    let flux_mode = (hbar * omega * (l_bridge / p) / 2.0).sqrt();
    let flux_bridge = p * flux_mode;
    let mut quartic = 0.0;
    for l_arm in [la, lb] {
        let e_j = (phi0 / (2.0 * PI)).powi(2) / (l_arm / nf);
        let phase = 2.0 * PI / phi0 * flux_bridge * (l_arm / (la + lb)) / nf;
        // two copies of each arm, N SQUIDs each
        quartic += 2.0 * nf * (-e_j * phase.powi(4) / 24.0) / H;
    }
    let mut x = DMatrix::<f64>::zeros(levels, levels);
    for k in 1..levels {
        let s = (k as f64).sqrt();
        x[(k - 1, k)] = s;
        x[(k, k - 1)] = s;
    }
    let x2 = &x * &x;
    let x4 = &x2 * &x2;
    let mut h = x4 * quartic;
    for k in 0..levels {
        h[(k, k)] += f * k as f64;
    }
    let mut e: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e[2] - 2.0 * e[1] + e[0]
}

/// All non-negative roots of `n[(Δ − K n)² + (κ/2)²] − S` by grid scan and bisection.
pub fn brute_force_roots(detuning: f64, kappa: f64, kerr: f64, source: f64) -> Vec<f64> {
    let g = |n: f64| n * ((detuning - kerr * n).powi(2) + kappa * kappa / 4.0) - source;
    let n_max = source / (kappa * kappa / 4.0) * (1.0 + 1e-9);
    let steps = 200_000;
    let mut roots = Vec::new();
    let mut prev = (0.0, g(0.0));
    for i in 1..=steps {
        let x = n_max * i as f64 / steps as f64;
        let y = g(x);
        if y == 0.0 {
            roots.push(x);
        } else if prev.1 != 0.0 && prev.1.signum() != y.signum() {
            let (mut lo, mut hi) = (prev.0, x);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if g(mid).signum() == g(lo).signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        prev = (x, y);
    }
    roots
}
