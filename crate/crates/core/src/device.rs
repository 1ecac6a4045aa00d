//! Device model: SQUID-array bridge coupler attached to a 3D cavity.
//!
//! Every rate and frequency is an ordinary frequency in Hz (κ/2π, ω/2π);
//! fluxes are in units of Φ₀ per SQUID loop.

use std::f64::consts::PI;

use thiserror::Error;

use crate::units::{angular, FLUX_QUANTUM, HBAR, PLANCK, REDUCED_FLUX_QUANTUM};

/// Smallest admissible |cos(π·flux)| before the SQUID inductance is treated as divergent.
pub const COS_GUARD: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DeviceError {
    #[error("SQUID inductance diverges at flux {flux} Φ₀ (|cos(πΦ)| = {cos:.3e})")]
    FluxSingularity { flux: f64, cos: f64 },
    #[error("bridge is balanced at the requested on-bias; coupling scale cannot be calibrated")]
    BalancedBias,
    #[error("invalid device parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, DeviceError>;

fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(DeviceError::InvalidParameter(msg()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JunctionParams {
    /// Critical current of one SQUID, in amperes.
    pub critical_current: f64,
}

impl JunctionParams {
    pub fn new(critical_current: f64) -> Result<Self> {
        require(critical_current > 0.0 && critical_current.is_finite(), || {
            format!("critical current must be positive, got {critical_current}")
        })?;
        Ok(Self { critical_current })
    }
}

/// Sign with which the gradiometric bias threads an arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FluxSign {
    Plus,
    Minus,
}

impl FluxSign {
    pub fn value(self) -> f64 {
        match self {
            FluxSign::Plus => 1.0,
            FluxSign::Minus => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SquidArrayArm {
    pub n_squids: u32,
    pub junction: JunctionParams,
    pub flux_sign: FluxSign,
}

impl SquidArrayArm {
    pub fn new(n_squids: u32, junction: JunctionParams, flux_sign: FluxSign) -> Result<Self> {
        require(n_squids >= 1, || "an arm needs at least one SQUID".into())?;
        Ok(Self { n_squids, junction, flux_sign })
    }

    /// Flux threading each SQUID of this arm.
    pub fn squid_flux(&self, bias: BiasPoint) -> f64 {
        bias.uniform + self.flux_sign.value() * bias.gradiometric
    }
}

/// Wheatstone bridge of SQUID arrays. Opposite arms are identical, so two
/// arm descriptions fully specify the four inductors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TibBridge {
    pub arm_a: SquidArrayArm,
    pub arm_b: SquidArrayArm,
    /// External coupling at full imbalance |β| = 1, Hz.
    pub coupling_scale: f64,
}

impl TibBridge {
    pub fn new(arm_a: SquidArrayArm, arm_b: SquidArrayArm, coupling_scale: f64) -> Result<Self> {
        require(arm_a.flux_sign == FluxSign::Plus, || "arm a must carry flux sign +1".into())?;
        require(arm_b.flux_sign == FluxSign::Minus, || "arm b must carry flux sign -1".into())?;
        require(coupling_scale > 0.0 && coupling_scale.is_finite(), || {
            format!("coupling scale must be positive, got {coupling_scale}")
        })?;
        Ok(Self { arm_a, arm_b, coupling_scale })
    }

    /// Symmetric bridge: both arms built from the same SQUID array.
    pub fn symmetric(n_squids: u32, junction: JunctionParams, coupling_scale: f64) -> Result<Self> {
        Self::new(
            SquidArrayArm::new(n_squids, junction, FluxSign::Plus)?,
            SquidArrayArm::new(n_squids, junction, FluxSign::Minus)?,
            coupling_scale,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityParams {
    /// Cavity frequency at the reference (off) bias, Hz.
    pub bare_frequency: f64,
    /// Loss of the empty cavity, Hz.
    pub bare_loss: f64,
    /// Loss added by the inserted chip, Hz.
    pub chip_loss: f64,
    /// Fraction of the mode inductance sitting in the bridge, in [0, 1).
    pub inductive_participation: f64,
}

impl CavityParams {
    pub fn new(bare_frequency: f64, bare_loss: f64, chip_loss: f64, participation: f64) -> Result<Self> {
        require(bare_frequency > 0.0 && bare_frequency.is_finite(), || {
            format!("bare frequency must be positive, got {bare_frequency}")
        })?;
        require(bare_loss >= 0.0 && bare_loss.is_finite(), || format!("bare loss must be >= 0, got {bare_loss}"))?;
        require(chip_loss >= 0.0 && chip_loss.is_finite(), || format!("chip loss must be >= 0, got {chip_loss}"))?;
        require((0.0..1.0).contains(&participation), || {
            format!("inductive participation must lie in [0, 1), got {participation}")
        })?;
        Ok(Self { bare_frequency, bare_loss, chip_loss, inductive_participation: participation })
    }

    pub fn internal_loss(&self) -> f64 {
        self.bare_loss + self.chip_loss
    }
}

/// Flux biases per SQUID, in units of Φ₀.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BiasPoint {
    pub uniform: f64,
    pub gradiometric: f64,
}

impl BiasPoint {
    pub fn new(uniform: f64, gradiometric: f64) -> Self {
        Self { uniform, gradiometric }
    }

    pub fn is_finite(&self) -> bool {
        self.uniform.is_finite() && self.gradiometric.is_finite()
    }

    pub fn with_gradiometric(self, gradiometric: f64) -> Self {
        Self { gradiometric, ..self }
    }
}

/// The uniform working point plus the gradiometric bias used as "on".
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub uniform: f64,
    pub on_gradiometric: f64,
}

impl OperatingPoint {
    /// Balanced bridge at the working uniform flux; also the frequency reference.
    pub fn off_bias(&self) -> BiasPoint {
        BiasPoint::new(self.uniform, 0.0)
    }

    pub fn on_bias(&self) -> BiasPoint {
        BiasPoint::new(self.uniform, self.on_gradiometric)
    }

    pub fn at(&self, gradiometric: f64) -> BiasPoint {
        BiasPoint::new(self.uniform, gradiometric)
    }
}

/// Extra loss that switches on above a gradiometric threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParasiticLoss {
    /// Hz per Φ₀ of gradiometric bias above the threshold.
    pub slope: f64,
    /// Φ₀.
    pub threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceParams {
    pub cavity: CavityParams,
    pub bridge: TibBridge,
    pub operating_point: OperatingPoint,
    /// Characteristic impedance of the output line, Ω.
    pub line_impedance: f64,
    pub parasitic: Option<ParasiticLoss>,
}

impl DeviceParams {
    pub fn new(
        cavity: CavityParams,
        bridge: TibBridge,
        operating_point: OperatingPoint,
        line_impedance: f64,
        parasitic: Option<ParasiticLoss>,
    ) -> Result<Self> {
        require(line_impedance > 0.0 && line_impedance.is_finite(), || {
            format!("line impedance must be positive, got {line_impedance}")
        })?;
        require(
            operating_point.uniform.is_finite() && operating_point.on_gradiometric.is_finite(),
            || "operating point must be finite".into(),
        )?;
        if let Some(p) = parasitic {
            require(p.slope >= 0.0 && p.slope.is_finite(), || "parasitic slope must be >= 0".into())?;
            require(p.threshold >= 0.0 && p.threshold.is_finite(), || {
                "parasitic threshold must be >= 0".into()
            })?;
        }
        Ok(Self { cavity, bridge, operating_point, line_impedance, parasitic })
    }

    pub fn without_parasitics(mut self) -> Self {
        self.parasitic = None;
        self
    }
}

/// Josephson inductance of one symmetric SQUID, `Φ₀ / (2π I_c |cos πΦ|)`.
pub fn squid_inductance(flux: f64, junction: &JunctionParams) -> Result<f64> {
    let cos = (PI * flux.rem_euclid(1.0)).cos().abs();
    if !(cos > COS_GUARD) {
        return Err(DeviceError::FluxSingularity { flux, cos });
    }
    Ok(REDUCED_FLUX_QUANTUM / (junction.critical_current * cos))
}

pub fn arm_inductance(arm: &SquidArrayArm, bias: BiasPoint) -> Result<f64> {
    Ok(arm.n_squids as f64 * squid_inductance(arm.squid_flux(bias), &arm.junction)?)
}

/// Normalized bridge imbalance β = (L_a − L_b)/(L_a + L_b).
pub fn bridge_imbalance(bridge: &TibBridge, bias: BiasPoint) -> Result<f64> {
    let la = arm_inductance(&bridge.arm_a, bias)?;
    let lb = arm_inductance(&bridge.arm_b, bias)?;
    Ok((la - lb) / (la + lb))
}

/// κ_ext = κ₀·β².
pub fn external_coupling(device: &DeviceParams, bias: BiasPoint) -> Result<f64> {
    let beta = bridge_imbalance(&device.bridge, bias)?;
    Ok(device.bridge.coupling_scale * beta * beta)
}

/// Rescale κ₀ so that `external_coupling(on_bias)` equals `target_kappa_max`.
pub fn calibrate_coupling_scale(
    device: &DeviceParams,
    on_bias: BiasPoint,
    target_kappa_max: f64,
) -> Result<DeviceParams> {
    require(target_kappa_max > 0.0 && target_kappa_max.is_finite(), || {
        format!("target coupling must be positive, got {target_kappa_max}")
    })?;
    let beta = bridge_imbalance(&device.bridge, on_bias)?;
    if beta == 0.0 {
        return Err(DeviceError::BalancedBias);
    }
    let mut out = *device;
    out.bridge.coupling_scale = target_kappa_max / (beta * beta);
    Ok(out)
}

/// Inductance seen across the bridge diagonal: two series pairs in parallel,
/// i.e. the mean arm inductance.
pub fn effective_bridge_inductance(bridge: &TibBridge, bias: BiasPoint) -> Result<f64> {
    let la = arm_inductance(&bridge.arm_a, bias)?;
    let lb = arm_inductance(&bridge.arm_b, bias)?;
    Ok(0.5 * (la + lb))
}

pub fn cavity_frequency(device: &DeviceParams, bias: BiasPoint) -> Result<f64> {
    let p = device.cavity.inductive_participation;
    if p == 0.0 {
        return Ok(device.cavity.bare_frequency);
    }
    let l = effective_bridge_inductance(&device.bridge, bias)?;
    let l_ref = effective_bridge_inductance(&device.bridge, device.operating_point.off_bias())?;
    Ok(pulled_frequency(device.cavity.bare_frequency, p, l / l_ref))
}

/// `f_bare / sqrt(1 + p (ratio − 1))`.
pub fn pulled_frequency(bare_frequency: f64, participation: f64, inductance_ratio: f64) -> f64 {
    bare_frequency / (1.0 + participation * (inductance_ratio - 1.0)).sqrt()
}

pub fn internal_loss(device: &DeviceParams, bias: BiasPoint) -> f64 {
    let base = device.cavity.internal_loss();
    match device.parasitic {
        Some(p) => base + (bias.gradiometric.abs() - p.threshold).max(0.0) * p.slope,
        None => base,
    }
}

pub fn kappa_total(device: &DeviceParams, bias: BiasPoint) -> Result<f64> {
    Ok(internal_loss(device, bias) + external_coupling(device, bias)?)
}

/// Self-Kerr in Hz per photon, from first-order perturbation theory on the
/// quartic term of every SQUID's cosine potential.
///
/// The mode's flux zero-point fluctuation across its total inductance
/// `L_bridge / p` is divided onto the bridge diagonal (fraction `p`), then
/// between the two series arms of each path in proportion to their
/// inductance, then evenly over the SQUIDs of the arm. A SQUID with phase
/// fluctuation φ and Josephson energy E_J contributes `−E_J φ⁴ / 2` to
/// E(2) − 2E(1) + E(0).
pub fn self_kerr(device: &DeviceParams, bias: BiasPoint) -> Result<f64> {
    let p = device.cavity.inductive_participation;
    if p == 0.0 {
        return Ok(0.0);
    }
    let bridge = &device.bridge;
    let la = arm_inductance(&bridge.arm_a, bias)?;
    let lb = arm_inductance(&bridge.arm_b, bias)?;
    let l_bridge = 0.5 * (la + lb);
    let omega = angular(cavity_frequency(device, bias)?);
    let flux_zpf_total = (HBAR * omega * (l_bridge / p) / 2.0).sqrt();
    let flux_bridge = p * flux_zpf_total;

    let mut kerr_joules = 0.0;
    for (arm, l_arm) in [(&bridge.arm_a, la), (&bridge.arm_b, lb)] {
        let n = arm.n_squids as f64;
        let l_squid = l_arm / n;
        let e_j = REDUCED_FLUX_QUANTUM * REDUCED_FLUX_QUANTUM / l_squid;
        let phase = 2.0 * PI / FLUX_QUANTUM * flux_bridge * (l_arm / (la + lb)) / n;
        // two physical copies of each arm in the bridge
        kerr_joules += 2.0 * n * (-0.5 * e_j * phase.powi(4));
    }
    Ok(kerr_joules / PLANCK)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn junction(ic: f64) -> JunctionParams {
        JunctionParams::new(ic).unwrap()
    }

    fn test_device(p: f64) -> DeviceParams {
        DeviceParams::new(
            CavityParams::new(5.772e9, 450.0, 1280.0, p).unwrap(),
            TibBridge::symmetric(20, junction(1e-6), 1e6).unwrap(),
            OperatingPoint { uniform: 0.25, on_gradiometric: 0.1 },
            50.0,
            None,
        )
        .unwrap()
    }

    #[test]
    fn squid_inductance_values() {
        let l0 = squid_inductance(0.0, &junction(1e-6)).unwrap();
        assert!((l0 - 329.1e-12).abs() < 0.1e-12, "{l0}");
        let l3 = squid_inductance(1.0 / 3.0, &junction(1e-6)).unwrap();
        assert!((l3 / l0 - 2.0).abs() < 1e-12);
        assert!((l3 - 658.2e-12).abs() < 0.1e-12);
        assert!(matches!(
            squid_inductance(0.5, &junction(1e-6)),
            Err(DeviceError::FluxSingularity { .. })
        ));
    }

    #[test]
    fn arm_flux_convention() {
        let bridge = TibBridge::symmetric(20, junction(1e-6), 1.0).unwrap();
        let bias = BiasPoint::new(0.25, 0.1);
        assert!((bridge.arm_a.squid_flux(bias) - 0.35).abs() < 1e-15);
        assert!((bridge.arm_b.squid_flux(bias) - 0.15).abs() < 1e-15);
        let balanced = BiasPoint::new(0.25, 0.0);
        assert_eq!(
            arm_inductance(&bridge.arm_a, balanced).unwrap(),
            arm_inductance(&bridge.arm_b, balanced).unwrap()
        );
        let l = arm_inductance(&bridge.arm_a, BiasPoint::new(0.0, 0.0)).unwrap();
        assert!((l - 6.582e-9).abs() < 0.001e-9, "{l}");
    }

    #[test]
    fn imbalance_values() {
        let bridge = TibBridge::symmetric(20, junction(1e-6), 1.0).unwrap();
        assert_eq!(bridge_imbalance(&bridge, BiasPoint::new(0.25, 0.0)).unwrap(), 0.0);
        let a = 1.0 / (0.35 * PI).cos();
        let b = 1.0 / (0.15 * PI).cos();
        let expected = (a - b) / (a + b);
        let beta = bridge_imbalance(&bridge, BiasPoint::new(0.25, 0.1)).unwrap();
        assert!((beta - expected).abs() < 1e-14);
        assert!((beta - 0.3249).abs() < 1e-4);
        let neg = bridge_imbalance(&bridge, BiasPoint::new(0.25, -0.1)).unwrap();
        assert!((beta + neg).abs() < 1e-15);
    }

    #[test]
    fn calibration_hits_target_and_scales_quadratically() {
        let dev = test_device(0.0);
        let on = dev.operating_point.on_bias();
        let cal = calibrate_coupling_scale(&dev, on, 1.96e6).unwrap();
        let k = external_coupling(&cal, on).unwrap();
        assert!((k - 1.96e6).abs() < 1e-6);
        // β/2 → κ/4
        let beta = bridge_imbalance(&cal.bridge, on).unwrap();
        let quarter = cal.bridge.coupling_scale * (beta / 2.0).powi(2);
        assert!((quarter - 0.49e6).abs() < 1e-6);
        assert!(calibrate_coupling_scale(&dev, on, 0.0).is_err());
        assert_eq!(
            calibrate_coupling_scale(&dev, dev.operating_point.off_bias(), 1e6),
            Err(DeviceError::BalancedBias)
        );
    }

    #[test]
    fn frequency_pulling() {
        let dev = test_device(0.0);
        assert_eq!(cavity_frequency(&dev, BiasPoint::new(0.25, 0.13)).unwrap(), 5.772e9);
        let dev = test_device(0.01);
        assert_eq!(cavity_frequency(&dev, dev.operating_point.off_bias()).unwrap(), 5.772e9);
        assert!((pulled_frequency(5.772e9, 0.01, 1.1) - 5.772e9 / 1.001f64.sqrt()).abs() < 1e-3);
        assert!((pulled_frequency(5.772e9, 0.01, 1.1) - 5.76912e9).abs() < 1e4);
        // more inductance, lower frequency
        assert!(cavity_frequency(&dev, BiasPoint::new(0.25, 0.1)).unwrap() < 5.772e9);
    }

    #[test]
    fn internal_loss_with_parasitics() {
        let mut dev = test_device(0.0);
        assert!((internal_loss(&dev, BiasPoint::new(0.25, 0.3)) - 1730.0).abs() < 1e-9);
        dev.cavity.chip_loss = 0.0;
        assert!((internal_loss(&dev, BiasPoint::default()) - 450.0).abs() < 1e-9);
        let mut dev = test_device(0.0);
        dev.parasitic = Some(ParasiticLoss { slope: 10e3, threshold: 0.2 });
        assert!((internal_loss(&dev, BiasPoint::new(0.25, 0.25)) - 2230.0).abs() < 1e-9);
        assert!((internal_loss(&dev, BiasPoint::new(0.25, -0.25)) - 2230.0).abs() < 1e-9);
        assert!((internal_loss(&dev, BiasPoint::new(0.25, 0.1)) - 1730.0).abs() < 1e-9);
    }

    #[test]
    fn kerr_sign_and_scaling() {
        let dev = test_device(0.0);
        assert_eq!(self_kerr(&dev, dev.operating_point.off_bias()).unwrap(), 0.0);
        let dev = test_device(2e-3);
        let off = dev.operating_point.off_bias();
        let k1 = self_kerr(&dev, off).unwrap();
        assert!(k1 < 0.0);
        // same arm inductance with twice the SQUIDs
        let mut dev2 = dev;
        dev2.bridge = TibBridge::symmetric(40, junction(2e-6), 1e6).unwrap();
        let k2 = self_kerr(&dev2, off).unwrap();
        assert!((k2 / k1 - 0.25).abs() < 1e-12, "{}", k2 / k1);
    }

    #[test]
    fn kappa_total_sums() {
        let dev = calibrate_coupling_scale(&test_device(0.0), BiasPoint::new(0.25, 0.1), 1.96e6).unwrap();
        let on = dev.operating_point.on_bias();
        assert!((kappa_total(&dev, on).unwrap() - (1.96e6 + 1730.0)).abs() < 1e-6);
        let off = dev.operating_point.off_bias();
        assert_eq!(kappa_total(&dev, off).unwrap(), internal_loss(&dev, off));
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(JunctionParams::new(0.0).is_err());
        assert!(SquidArrayArm::new(0, junction(1e-6), FluxSign::Plus).is_err());
        assert!(CavityParams::new(5e9, 0.0, 0.0, 1.0).is_err());
        assert!(CavityParams::new(-1.0, 0.0, 0.0, 0.0).is_err());
        assert!(TibBridge::symmetric(1, junction(1e-6), 0.0).is_err());
    }
}
