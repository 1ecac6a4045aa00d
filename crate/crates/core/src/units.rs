//! Physical constants (CODATA 2018, exact where SI defines them).

use std::f64::consts::PI;

/// Planck constant, J·s.
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Reduced Planck constant, J·s.
pub const HBAR: f64 = PLANCK / (2.0 * PI);
/// Elementary charge, C.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Magnetic flux quantum h/2e, Wb.
pub const FLUX_QUANTUM: f64 = PLANCK / (2.0 * ELEMENTARY_CHARGE);
/// Reduced flux quantum Φ₀/2π, Wb.
pub const REDUCED_FLUX_QUANTUM: f64 = FLUX_QUANTUM / (2.0 * PI);

/// Ordinary frequency (Hz) to angular rate (rad/s).
#[inline]
pub fn angular(f_hz: f64) -> f64 {
    2.0 * PI * f_hz
}

/// Photon energy ħω at an ordinary frequency.
#[inline]
pub fn photon_energy(f_hz: f64) -> f64 {
    PLANCK * f_hz
}
