//! Rotating-frame dynamics of the driven, switched Kerr cavity and the
//! synthesized output voltage, including the ADC low-pass response.
//!
//! The intracavity field `a` is normalized so that |a|² is the photon number;
//! the drive `α_in` so that |α_in|² is the incident photon flux. In a frame
//! rotating at `frame_frequency`:
//!
//! ```text
//! da/dt = (i·2π·(δ + K|a|²) − π·κ)·a + √(2π·κ_ext)·α_in
//! ```
//!
//! with δ = f_cav(bias) − f_frame and all rates ordinary frequencies.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::device::{self, BiasPoint, DeviceError, DeviceParams};
use crate::spectroscopy::duffing_steady_states;
use crate::trace::{trapezoid, ComplexTrace, RealTrace, TraceError};
use crate::units::{angular, PLANCK};

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error(transparent)]
    Device(#[from] DeviceError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("time step {dt:e} s exceeds 0.1/{rate:e} Hz")]
    StepTooLarge { dt: f64, rate: f64 },
    #[error("state became non-finite at t = {0:e} s")]
    NonFiniteState(f64),
    #[error("trace and pulse sequence time bases differ")]
    TimeBaseMismatch,
    #[error("cannot hold {photons} photons in a monostable steady state: {reason}")]
    UnreachableSteadyState { photons: f64, reason: String },
    #[error("invalid pulse sequence: {0}")]
    InvalidSequence(String),
}

pub type Result<T> = std::result::Result<T, DynamicsError>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveSegment {
    /// Seconds.
    pub duration: f64,
    /// √(photons/s).
    pub drive_amplitude: f64,
    /// Drive frequency minus frame frequency, Hz.
    pub drive_detuning: f64,
    pub bias: BiasPoint,
}

impl DriveSegment {
    pub fn idle(duration: f64, bias: BiasPoint) -> Self {
        Self { duration, drive_amplitude: 0.0, drive_detuning: 0.0, bias }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PulseSequence {
    pub frame_frequency: f64,
    pub segments: Vec<DriveSegment>,
    /// Linear bias ramp at each segment boundary; 0 switches instantly.
    pub bias_ramp_time: f64,
    /// Field at the start of the first segment.
    pub initial_amplitude: Complex64,
    /// Time stamp of the start of the first segment.
    pub start_time: f64,
}

impl PulseSequence {
    pub fn new(frame_frequency: f64, segments: Vec<DriveSegment>) -> Result<Self> {
        let seq = Self {
            frame_frequency,
            segments,
            bias_ramp_time: 0.0,
            initial_amplitude: Complex64::new(0.0, 0.0),
            start_time: 0.0,
        };
        seq.validate()?;
        Ok(seq)
    }

    pub fn with_initial(mut self, a0: Complex64) -> Self {
        self.initial_amplitude = a0;
        self
    }

    pub fn starting_at(mut self, t: f64) -> Self {
        self.start_time = t;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(DynamicsError::InvalidSequence(m.to_string()));
        if self.segments.is_empty() {
            return bad("at least one segment is required");
        }
        for s in &self.segments {
            if !(s.duration > 0.0 && s.duration.is_finite()) {
                return bad("segment durations must be positive and finite");
            }
            if !(s.drive_amplitude >= 0.0 && s.drive_amplitude.is_finite()) {
                return bad("drive amplitudes must be non-negative and finite");
            }
            if !s.drive_detuning.is_finite() || !s.bias.is_finite() {
                return bad("drive detuning and bias must be finite");
            }
        }
        if !(self.bias_ramp_time >= 0.0 && self.bias_ramp_time.is_finite()) {
            return bad("ramp time must be non-negative");
        }
        if !self.frame_frequency.is_finite() || !self.start_time.is_finite() {
            return bad("frame frequency and start time must be finite");
        }
        Ok(())
    }

    pub fn duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    fn boundaries(&self) -> Vec<f64> {
        let mut t = self.start_time;
        let mut out = Vec::with_capacity(self.segments.len() + 1);
        out.push(t);
        for s in &self.segments {
            t += s.duration;
            out.push(t);
        }
        out
    }
}

/// Single-pole ADC response.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdcModel {
    /// γ_c/2π, Hz.
    pub corner_frequency: f64,
}

impl AdcModel {
    pub fn new(corner_frequency: f64) -> Result<Self> {
        if !(corner_frequency > 0.0 && corner_frequency.is_finite()) {
            return Err(DynamicsError::InvalidSequence(format!(
                "ADC corner frequency must be positive, got {corner_frequency}"
            )));
        }
        Ok(Self { corner_frequency })
    }
}

/// How the outgoing field is turned into a real voltage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Detection {
    /// |V|: envelope of the outgoing field.
    Amplitude,
    /// One quadrature, Re[e^{iφ} V].
    Quadrature { phase: f64 },
}

impl Default for Detection {
    /// The quadrature in phase with the cavity field at the switch.
    fn default() -> Self {
        Detection::Quadrature { phase: 0.0 }
    }
}

/// Instantaneous coefficients of the field equation.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Coefficients {
    detuning: f64,
    kappa: f64,
    kappa_ext: f64,
    kerr: f64,
}

impl Coefficients {
    fn at(device: &DeviceParams, bias: BiasPoint, frame: f64) -> Result<Self> {
        let kappa_ext = device::external_coupling(device, bias)?;
        Ok(Self {
            detuning: device::cavity_frequency(device, bias)? - frame,
            kappa: device::internal_loss(device, bias) + kappa_ext,
            kappa_ext,
            kerr: device::self_kerr(device, bias)?,
        })
    }
}

/// Piecewise description of the bias waveform of a sequence.
struct Schedule<'a> {
    device: &'a DeviceParams,
    seq: &'a PulseSequence,
    bounds: Vec<f64>,
    coeffs: Vec<Coefficients>,
}

impl<'a> Schedule<'a> {
    fn new(device: &'a DeviceParams, seq: &'a PulseSequence) -> Result<Self> {
        seq.validate()?;
        let coeffs = seq
            .segments
            .iter()
            .map(|s| Coefficients::at(device, s.bias, seq.frame_frequency))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { device, seq, bounds: seq.boundaries(), coeffs })
    }

    fn segment_index(&self, t: f64) -> usize {
        let k = self.bounds.partition_point(|b| *b <= t);
        k.saturating_sub(1).min(self.seq.segments.len() - 1)
    }

    /// Bias at `t`, and whether it sits inside a ramp.
    fn bias(&self, t: f64) -> (usize, BiasPoint, bool) {
        let k = self.segment_index(t);
        let seg = &self.seq.segments[k];
        let ramp = self.seq.bias_ramp_time;
        if k > 0 && ramp > 0.0 {
            let tau = t - self.bounds[k];
            if tau < ramp {
                let prev = self.seq.segments[k - 1].bias;
                let x = tau / ramp;
                let b = BiasPoint::new(
                    prev.uniform + x * (seg.bias.uniform - prev.uniform),
                    prev.gradiometric + x * (seg.bias.gradiometric - prev.gradiometric),
                );
                return (k, b, true);
            }
        }
        (k, seg.bias, false)
    }

    /// Coefficients at `t` for a step whose midpoint lies in segment `step`.
    /// Outside ramps the step's own segment wins, so a step ending exactly on
    /// a boundary does not see the next segment in its last stage.
    fn coefficients(&self, t: f64, step: usize) -> Result<(usize, Coefficients)> {
        let (k, bias, ramping) = self.bias(t);
        if ramping {
            Ok((k, Coefficients::at(self.device, bias, self.seq.frame_frequency)?))
        } else {
            Ok((step, self.coeffs[step]))
        }
    }

    fn fastest_rate(&self) -> f64 {
        self.coeffs
            .iter()
            .zip(&self.seq.segments)
            .map(|(c, s)| c.kappa.max(c.detuning.abs()).max(s.drive_detuning.abs()))
            .fold(0.0, f64::max)
    }
}

fn field_derivative(c: &Coefficients, seg: &DriveSegment, t: f64, a: Complex64) -> Complex64 {
    let rot = Complex64::new(-PI * c.kappa, 2.0 * PI * (c.detuning + c.kerr * a.norm_sqr()));
    let mut da = rot * a;
    if seg.drive_amplitude > 0.0 {
        let drive = Complex64::from_polar(seg.drive_amplitude, 2.0 * PI * seg.drive_detuning * t);
        da += (2.0 * PI * c.kappa_ext).sqrt() * drive;
    }
    da
}

/// Integrate the field over the whole sequence with classical fixed-step RK4.
/// The returned trace starts at `sequence.start_time` and has
/// `round(duration/dt) + 1` samples.
pub fn integrate_cavity(device: &DeviceParams, sequence: &PulseSequence, dt: f64) -> Result<ComplexTrace> {
    let sched = Schedule::new(device, sequence)?;
    let rate = sched.fastest_rate();
    if !(dt > 0.0) || dt * rate > 0.1 {
        return Err(DynamicsError::StepTooLarge { dt, rate });
    }
    let steps = (sequence.duration() / dt).round() as usize;
    let t0 = sequence.start_time;
    let mut samples = Vec::with_capacity(steps + 1);
    let mut a = sequence.initial_amplitude;
    samples.push(a);
    let f = |t: f64, step: usize, a: Complex64| -> Result<Complex64> {
        let (k, c) = sched.coefficients(t, step)?;
        Ok(field_derivative(&c, &sequence.segments[k], t, a))
    };
    for i in 0..steps {
        let t = t0 + i as f64 * dt;
        let s = sched.segment_index(t + 0.5 * dt);
        let k1 = f(t, s, a)?;
        let k2 = f(t + 0.5 * dt, s, a + k1 * (0.5 * dt))?;
        let k3 = f(t + 0.5 * dt, s, a + k2 * (0.5 * dt))?;
        let k4 = f(t + dt, s, a + k3 * dt)?;
        a += (k1 + 2.0 * k2 + 2.0 * k3 + k4) * (dt / 6.0);
        if !(a.re.is_finite() && a.im.is_finite()) {
            return Err(DynamicsError::NonFiniteState(t + dt));
        }
        samples.push(a);
    }
    Ok(ComplexTrace::new(t0, dt, samples)?)
}

/// Output voltage across the line, V = √(2π κ_ext ħω Z₀)·a, detected per `detection`.
pub fn output_voltage(
    device: &DeviceParams,
    trace: &ComplexTrace,
    sequence: &PulseSequence,
    detection: Detection,
) -> Result<RealTrace> {
    let sched = Schedule::new(device, sequence)?;
    let expected = (sequence.duration() / trace.dt).round() as usize + 1;
    if trace.len() != expected || (trace.t0 - sequence.start_time).abs() > 0.5 * trace.dt {
        return Err(DynamicsError::TimeBaseMismatch);
    }
    // per-segment gain, recomputed only inside ramps
    let gain_at = |bias: BiasPoint| -> Result<f64> {
        let ke = device::external_coupling(device, bias)?;
        let f = device::cavity_frequency(device, bias)?;
        Ok((angular(ke) * PLANCK * f * device.line_impedance).sqrt())
    };
    let gains = sequence.segments.iter().map(|s| gain_at(s.bias)).collect::<Result<Vec<_>>>()?;
    let mut out = Vec::with_capacity(trace.len());
    for (i, a) in trace.samples().iter().enumerate() {
        let (k, bias, ramping) = sched.bias(trace.time(i));
        let g = if ramping { gain_at(bias)? } else { gains[k] };
        let v = match detection {
            Detection::Amplitude => g * a.norm(),
            Detection::Quadrature { phase } => g * (Complex64::from_polar(1.0, phase) * a).re,
        };
        out.push(v);
    }
    Ok(RealTrace::new(trace.t0, trace.dt, out)?)
}

/// Single-pole low-pass, y' = γ_c (x − y), with the input held between
/// samples: y₀ = 0, y_{k+1} = y_k + (1 − e^{−γ_c dt})(x_k − y_k).
pub fn apply_adc_filter(trace: &RealTrace, adc: &AdcModel) -> Result<RealTrace> {
    if trace.dt * adc.corner_frequency > 0.1 {
        return Err(DynamicsError::StepTooLarge { dt: trace.dt, rate: adc.corner_frequency });
    }
    let c = -(-angular(adc.corner_frequency) * trace.dt).exp_m1();
    let x = trace.samples();
    let mut y = Vec::with_capacity(x.len());
    let mut acc = 0.0;
    y.push(acc);
    for xk in &x[..x.len() - 1] {
        acc += c * (xk - acc);
        y.push(acc);
    }
    Ok(RealTrace::new(trace.t0, trace.dt, y)?)
}

/// Energy delivered into the line, in photons: ∫V² dt / (Z₀ ħω).
pub fn measured_energy(trace: &RealTrace, device: &DeviceParams, bias: BiasPoint) -> Result<f64> {
    let f = device::cavity_frequency(device, bias)?;
    Ok(trapezoid(trace, |_, v| v * v) / (device.line_impedance * PLANCK * f))
}

/// Reference voltage V₀ = √(E_stored κ_g Z₀) with κ_g angular.
pub fn normalization_voltage(stored_photons: f64, kappa_g: f64, frequency: f64, line_impedance: f64) -> f64 {
    (stored_photons * PLANCK * frequency * angular(kappa_g) * line_impedance).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RingdownSettings {
    pub dt: f64,
    /// Drive-off, coupler-off interval before readout, s.
    pub hold_time: f64,
    /// Part of the hold that is recorded ahead of the switch, s.
    pub pretrigger: f64,
    /// Readout window; `None` records 10 energy decay times.
    pub window: Option<f64>,
    /// Preparation length in amplitude decay times at the on-bias.
    pub settle_decay_times: f64,
    pub adc: AdcModel,
    pub detection: Detection,
}

impl Default for RingdownSettings {
    fn default() -> Self {
        Self {
            dt: 1e-9,
            hold_time: 1e-6,
            pretrigger: 20e-9,
            window: None,
            settle_decay_times: 18.0,
            adc: AdcModel { corner_frequency: 48e6 },
            detection: Detection::default(),
        }
    }
}

/// Everything recorded in one ringdown run.
#[derive(Debug, Clone)]
pub struct RingdownRecord {
    /// Intracavity field during readout (frame at the readout cavity frequency).
    pub field: ComplexTrace,
    /// Output voltage before the ADC.
    pub voltage: RealTrace,
    /// Output voltage after the ADC; the measured trace.
    pub filtered: RealTrace,
    /// Time at which the coupler switches to the readout bias.
    pub switch_time: f64,
    /// Photons in the cavity at the switch.
    pub stored_photons: f64,
    pub readout_bias: BiasPoint,
    pub readout_frequency: f64,
    pub readout_kappa: f64,
}

impl RingdownRecord {
    /// Unfiltered voltage from the switch onward. Integrating this avoids
    /// straddling the instantaneous switch with a quadrature panel.
    pub fn readout_voltage(&self) -> RealTrace {
        let v = &self.voltage;
        let k = (((self.switch_time - v.t0) / v.dt).round().max(0.0) as usize).min(v.len() - 2);
        RealTrace::new(v.time(k), v.dt, v.samples()[k..].to_vec()).expect("slice of a valid trace")
    }
}

/// Prepare, hold and release: drive on resonance at the on-bias until the
/// steady state is reached, turn drive and coupler off for `hold_time`, then
/// switch to `readout_bias` and record the outgoing field. The drive is sized
/// so that `stored_photons` remain at the switch.
pub fn ringdown_protocol(
    device: &DeviceParams,
    readout_bias: BiasPoint,
    stored_photons: f64,
    settings: &RingdownSettings,
) -> Result<RingdownRecord> {
    if !(stored_photons > 0.0 && stored_photons.is_finite()) {
        return Err(DynamicsError::InvalidSequence(format!("stored photons must be positive, got {stored_photons}")));
    }
    let dt = settings.dt;
    let op = device.operating_point;
    let (on, off) = (op.on_bias(), op.off_bias());
    let f_on = device::cavity_frequency(device, on)?;
    let ke_on = device::external_coupling(device, on)?;
    let ki_on = device::internal_loss(device, on);
    let kappa_on = ke_on + ki_on;
    let kerr_on = device::self_kerr(device, on)?;
    if ke_on <= 0.0 {
        return Err(DynamicsError::UnreachableSteadyState {
            photons: stored_photons,
            reason: "coupler is off at the on-bias".into(),
        });
    }
    let kappa_off = device::kappa_total(device, off)?;
    let pretrigger = (settings.pretrigger / dt).round() * dt;
    let hold = (settings.hold_time / dt).round() * dt;
    if pretrigger >= hold {
        return Err(DynamicsError::InvalidSequence("pretrigger must be shorter than the hold".into()));
    }
    // photons needed at the end of preparation
    let n_ss = stored_photons * (angular(kappa_off) * hold).exp();
    let flux = 2.0 * PI * n_ss * ((kerr_on * n_ss).powi(2) + kappa_on * kappa_on / 4.0) / ke_on;
    let sol = duffing_steady_states(0.0, ki_on, ke_on, kerr_on, flux);
    if sol.is_bistable() {
        return Err(DynamicsError::UnreachableSteadyState {
            photons: stored_photons,
            reason: "resonant drive is bistable at this photon number".into(),
        });
    }
    let prep = (settings.settle_decay_times / (PI * kappa_on) / dt).ceil() * dt;
    let prepare = PulseSequence::new(
        f_on,
        vec![
            DriveSegment { duration: prep, drive_amplitude: flux.sqrt(), drive_detuning: 0.0, bias: on },
            DriveSegment::idle(hold - pretrigger, off),
        ],
    )?;
    let held = integrate_cavity(device, &prepare, dt)?;
    let a_hold = *held.samples().last().unwrap();

    // readout frame: demodulate at the readout cavity frequency, phase chosen
    // so the field is real and positive at the switch
    let f_ro = device::cavity_frequency(device, readout_bias)?;
    let kappa_ro = device::kappa_total(device, readout_bias)?;
    let window = settings.window.unwrap_or(10.0 / angular(kappa_ro));
    let window = (window / dt).round().max(2.0) * dt;
    let f_off = device::cavity_frequency(device, off)?;
    let pre_phase = 2.0 * PI * (f_off - f_ro) * pretrigger;
    let readout = PulseSequence::new(
        f_ro,
        vec![DriveSegment::idle(pretrigger, off), DriveSegment::idle(window, readout_bias)],
    )?
    .with_initial(Complex64::from_polar(a_hold.norm(), -pre_phase))
    .starting_at(-pretrigger);
    let field = integrate_cavity(device, &readout, dt)?;
    let voltage = output_voltage(device, &field, &readout, settings.detection)?;
    let filtered = apply_adc_filter(&voltage, &settings.adc)?;
    let switch_index = (pretrigger / dt).round() as usize;
    Ok(RingdownRecord {
        stored_photons: field.samples()[switch_index].norm_sqr(),
        field,
        voltage,
        filtered,
        switch_time: 0.0,
        readout_bias,
        readout_frequency: f_ro,
        readout_kappa: kappa_ro,
    })
}

/// Photons leaving through a channel of rate `kappa` (Hz) during the trace:
/// ∫ 2π κ |a|² dt.
pub fn photon_outflow(field: &ComplexTrace, kappa: f64) -> f64 {
    angular(kappa) * trapezoid(field, |_, a| a.norm_sqr())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::{CavityParams, JunctionParams, OperatingPoint, TibBridge};

    fn linear_device() -> DeviceParams {
        let d = DeviceParams::new(
            CavityParams::new(5.772e9, 450.0, 1280.0, 0.0).unwrap(),
            TibBridge::symmetric(50, JunctionParams::new(5e-6).unwrap(), 1.0).unwrap(),
            OperatingPoint { uniform: 0.25, on_gradiometric: 0.1 },
            50.0,
            None,
        )
        .unwrap();
        device::calibrate_coupling_scale(&d, d.operating_point.on_bias(), 1.96e6).unwrap()
    }

    #[test]
    fn free_decay_matches_closed_form() {
        let dev = linear_device();
        let bias = dev.operating_point.at(0.05);
        let kappa = device::kappa_total(&dev, bias).unwrap();
        let seq = PulseSequence::new(5.772e9, vec![DriveSegment::idle(1e-6, bias)])
            .unwrap()
            .with_initial(Complex64::new(10.0, 0.0));
        let tr = integrate_cavity(&dev, &seq, 1e-9).unwrap();
        for (i, a) in tr.samples().iter().enumerate().step_by(97) {
            let exact = 10.0 * (-PI * kappa * tr.time(i)).exp();
            assert!((a.norm() - exact).abs() < 1e-9 * 10.0, "{i}");
        }
    }

    #[test]
    fn resonant_drive_reaches_lorentzian_steady_state() {
        let dev = linear_device();
        let bias = dev.operating_point.at(0.03);
        let f0 = device::cavity_frequency(&dev, bias).unwrap();
        let ke = device::external_coupling(&dev, bias).unwrap();
        let k = device::kappa_total(&dev, bias).unwrap();
        let alpha: f64 = 1e5;
        let t = 30.0 / (PI * k);
        let seq = PulseSequence::new(
            f0,
            vec![DriveSegment { duration: t, drive_amplitude: alpha, drive_detuning: 0.0, bias }],
        )
        .unwrap();
        let tr = integrate_cavity(&dev, &seq, 5e-9).unwrap();
        let n = tr.samples().last().unwrap().norm_sqr();
        // n_ss = 4 κ_ext |α|² / (2π κ²)
        let expected = 4.0 * ke * alpha * alpha / (2.0 * PI * k * k);
        assert!((n / expected - 1.0).abs() < 1e-9, "{n} vs {expected}");
    }

    #[test]
    fn step_guard() {
        let dev = linear_device();
        let seq = PulseSequence::new(5.772e9, vec![DriveSegment::idle(1e-6, dev.operating_point.on_bias())]).unwrap();
        assert!(matches!(integrate_cavity(&dev, &seq, 1e-7), Err(DynamicsError::StepTooLarge { .. })));
        let tr = RealTrace::new(0.0, 1e-8, vec![0.0; 10]).unwrap();
        assert!(matches!(
            apply_adc_filter(&tr, &AdcModel::new(48e6).unwrap()),
            Err(DynamicsError::StepTooLarge { .. })
        ));
    }

    #[test]
    fn filter_unity_dc_gain_and_time_constant() {
        let adc = AdcModel::new(48e6).unwrap();
        let dt = 0.05e-9;
        let tr = RealTrace::new(0.0, dt, vec![1.0; 4000]).unwrap();
        let y = apply_adc_filter(&tr, &adc).unwrap();
        assert!((y.samples().last().unwrap() - 1.0).abs() < 1e-12);
        let tau = 1.0 / angular(48e6);
        let i = y.samples().iter().position(|v| *v >= 1.0 - (-1.0f64).exp()).unwrap();
        assert!((y.time(i) - tau).abs() <= dt, "{} vs {tau}", y.time(i));
    }

    #[test]
    fn zero_coupling_gives_zero_voltage() {
        let dev = linear_device();
        let off = dev.operating_point.off_bias();
        let seq = PulseSequence::new(5.772e9, vec![DriveSegment::idle(1e-7, off)])
            .unwrap()
            .with_initial(Complex64::new(3.0, 1.0));
        let tr = integrate_cavity(&dev, &seq, 1e-9).unwrap();
        let v = output_voltage(&dev, &tr, &seq, Detection::Amplitude).unwrap();
        assert!(v.samples().iter().all(|x| *x == 0.0));
    }

    #[test]
    fn voltage_time_base_checked() {
        let dev = linear_device();
        let on = dev.operating_point.on_bias();
        let seq = PulseSequence::new(5.772e9, vec![DriveSegment::idle(1e-7, on)]).unwrap();
        let tr = ComplexTrace::new(0.0, 1e-9, vec![Complex64::new(1.0, 0.0); 50]).unwrap();
        assert!(matches!(output_voltage(&dev, &tr, &seq, Detection::Amplitude), Err(DynamicsError::TimeBaseMismatch)));
    }

    #[test]
    fn voltage_scales_with_root_coupling() {
        let dev = linear_device();
        let on = dev.operating_point.on_bias();
        let seq = PulseSequence::new(5.772e9, vec![DriveSegment::idle(1e-8, on)]).unwrap();
        let tr = ComplexTrace::new(0.0, 1e-9, vec![Complex64::new(1.0, 0.0); 11]).unwrap();
        let v1 = output_voltage(&dev, &tr, &seq, Detection::Amplitude).unwrap();
        let mut dev2 = dev;
        dev2.bridge.coupling_scale *= 2.0;
        let v2 = output_voltage(&dev2, &tr, &seq, Detection::Amplitude).unwrap();
        assert!((v2.samples()[3] / v1.samples()[3] - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn ramped_bias_interpolates() {
        let dev = linear_device();
        let mut seq = PulseSequence::new(
            5.772e9,
            vec![DriveSegment::idle(10e-9, dev.operating_point.off_bias()), DriveSegment::idle(10e-9, dev.operating_point.on_bias())],
        )
        .unwrap();
        seq.bias_ramp_time = 4e-9;
        let sched = Schedule::new(&dev, &seq).unwrap();
        let (_, b, ramping) = sched.bias(12e-9);
        assert!(ramping);
        assert!((b.gradiometric - 0.05).abs() < 1e-12);
        let (_, b, ramping) = sched.bias(15e-9);
        assert!(!ramping && b.gradiometric == 0.1);
    }
}
