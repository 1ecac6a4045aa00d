//! C ABI over `tibsim`.
//!
//! Objects are opaque handles created by `tib_*_new*` and released by the
//! matching `tib_*_free`. Every fallible call returns a [`TibStatus`]; on
//! failure `tib_last_error_message` describes the error on the calling thread.
//! Rates are in Hz, flux in Φ₀, powers in W.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use tibsim::config::{Config, ConfigError};
use tibsim::device::{self, BiasPoint, DeviceError, DeviceParams};
use tibsim::dynamics::{ringdown_protocol, DynamicsError};
use tibsim::extraction::{fit_ringdown_with, FitError, FitResult};
use tibsim::protocols::{run_table1, ProtocolError};
use tibsim::spectroscopy::{self, SpectroscopyError};
use tibsim::trace::RealTrace;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TibStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Device = 4,
    Numerical = 5,
    Io = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

/// Configured device together with its run settings.
pub struct TibDevice {
    config: Config,
    device: DeviceParams,
}

/// Uniformly sampled real trace.
pub struct TibTrace {
    trace: RealTrace,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TibBias {
    pub uniform: f64,
    pub gradiometric: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TibComplex {
    pub re: f64,
    pub im: f64,
}

/// Steady states of the driven Kerr cavity, ascending in photon number.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TibSteadyStates {
    pub count: usize,
    pub photons: [f64; 3],
    /// 1 for stable branches.
    pub stable: [u8; 3],
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TibValue {
    pub value: f64,
    pub std_error: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TibRingdownFit {
    /// Switch time, s.
    pub t0: TibValue,
    /// Energy linewidth, Hz.
    pub kappa: TibValue,
    /// Filter corner, Hz.
    pub gamma_c: TibValue,
    /// V.
    pub amplitude: TibValue,
    pub converged: u8,
    /// 1 when the corner is pinned at the sampling limit.
    pub gamma_c_at_bound: u8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TibTable1 {
    pub loss_and_residual_coupling: TibValue,
    pub maximal_coupling: TibValue,
    pub on_off_ratio: TibValue,
    /// s.
    pub switching_time: TibValue,
    /// Hz per photon.
    pub self_kerr: TibValue,
    pub kappa_int: TibValue,
    pub gamma_c: TibValue,
    pub critical_bias_phi0: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(TibStatus, String);

impl From<DeviceError> for Failure {
    fn from(e: DeviceError) -> Self {
        Failure(TibStatus::Device, e.to_string())
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure(TibStatus::Config, e.to_string())
    }
}

impl From<FitError> for Failure {
    fn from(e: FitError) -> Self {
        Failure(TibStatus::Numerical, e.to_string())
    }
}

impl From<DynamicsError> for Failure {
    fn from(e: DynamicsError) -> Self {
        Failure(TibStatus::Numerical, e.to_string())
    }
}

impl From<SpectroscopyError> for Failure {
    fn from(e: SpectroscopyError) -> Self {
        Failure(TibStatus::Numerical, e.to_string())
    }
}

impl From<ProtocolError> for Failure {
    fn from(e: ProtocolError) -> Self {
        let status = match &e {
            ProtocolError::Config(_) => TibStatus::Config,
            ProtocolError::Io { .. } | ProtocolError::Csv(_) => TibStatus::Io,
            _ => TibStatus::Numerical,
        };
        Failure(status, e.to_string())
    }
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> TibStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            TibStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            TibStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(TibStatus::NullPointer, format!("{what} is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

fn bias(b: TibBias) -> BiasPoint {
    BiasPoint::new(b.uniform, b.gradiometric)
}

fn value(fit: &FitResult, name: &str) -> TibValue {
    TibValue {
        value: fit.value(name).unwrap_or(f64::NAN),
        std_error: fit.std_error(name).unwrap_or(f64::NAN),
    }
}

/// Message for the last failed call on this thread, or NULL. The pointer is
/// valid until the next `tib_*` call on the same thread.
#[no_mangle]
pub extern "C" fn tib_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Device from the shipped default configuration.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tib_device_new_default(out: *mut *mut TibDevice) -> TibStatus {
    guard(|| {
        let config = Config::shipped();
        let device = config.device()?;
        write(out, Box::into_raw(Box::new(TibDevice { config, device })))
    })
}

/// Device from a TOML configuration in the same format as the shipped default.
///
/// # Safety
/// `toml` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tib_device_from_toml(toml: *const c_char, out: *mut *mut TibDevice) -> TibStatus {
    guard(|| {
        if toml.is_null() {
            return Err(null("toml"));
        }
        let text = CStr::from_ptr(toml)
            .to_str()
            .map_err(|e| Failure(TibStatus::InvalidArgument, format!("configuration is not UTF-8: {e}")))?;
        let config = Config::from_toml_str(text)?;
        let device = config.device()?;
        write(out, Box::into_raw(Box::new(TibDevice { config, device })))
    })
}

/// # Safety
/// `dev` must come from a `tib_device_new*` call and not be freed twice. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn tib_device_free(dev: *mut TibDevice) {
    if !dev.is_null() {
        drop(Box::from_raw(dev));
    }
}

/// Bias at which the coupler is fully on.
///
/// # Safety
/// `dev` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tib_device_on_bias(dev: *const TibDevice, out: *mut TibBias) -> TibStatus {
    guard(|| {
        let b = deref(dev, "device")?.device.operating_point.on_bias();
        write(out, TibBias { uniform: b.uniform, gradiometric: b.gradiometric })
    })
}

unsafe fn scalar_query(
    dev: *const TibDevice,
    b: TibBias,
    out: *mut f64,
    f: impl FnOnce(&DeviceParams, BiasPoint) -> Result<f64, Failure>,
) -> TibStatus {
    guard(|| {
        let v = f(&deref(dev, "device")?.device, bias(b))?;
        write(out, v)
    })
}

/// External coupling rate κ_ext, Hz.
///
/// # Safety
/// `dev` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tib_external_coupling(dev: *const TibDevice, b: TibBias, out: *mut f64) -> TibStatus {
    scalar_query(dev, b, out, |d, b| Ok(device::external_coupling(d, b)?))
}

/// Cavity frequency, Hz.
///
/// # Safety
/// `dev` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tib_cavity_frequency(dev: *const TibDevice, b: TibBias, out: *mut f64) -> TibStatus {
    scalar_query(dev, b, out, |d, b| Ok(device::cavity_frequency(d, b)?))
}

/// Internal loss rate κ_int, Hz.
///
/// # Safety
/// `dev` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tib_internal_loss(dev: *const TibDevice, b: TibBias, out: *mut f64) -> TibStatus {
    scalar_query(dev, b, out, |d, b| Ok(device::internal_loss(d, b)))
}

/// Total linewidth κ, Hz.
///
/// # Safety
/// `dev` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tib_kappa_total(dev: *const TibDevice, b: TibBias, out: *mut f64) -> TibStatus {
    scalar_query(dev, b, out, |d, b| Ok(device::kappa_total(d, b)?))
}

/// Self-Kerr, Hz per photon.
///
/// # Safety
/// `dev` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tib_self_kerr(dev: *const TibDevice, b: TibBias, out: *mut f64) -> TibStatus {
    scalar_query(dev, b, out, |d, b| Ok(device::self_kerr(d, b)?))
}

/// Linear reflection coefficient at `frequency`.
///
/// # Safety
/// `dev` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tib_reflection_linear(
    dev: *const TibDevice,
    b: TibBias,
    frequency: f64,
    out: *mut TibComplex,
) -> TibStatus {
    guard(|| {
        let g = spectroscopy::reflection_linear(&deref(dev, "device")?.device, bias(b), frequency)?;
        write(out, TibComplex { re: g.re, im: g.im })
    })
}

/// Steady states of a driven Kerr cavity; `photon_flux` is the incident flux in photons/s.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tib_duffing_steady_states(
    detuning: f64,
    kappa_int: f64,
    kappa_ext: f64,
    kerr: f64,
    photon_flux: f64,
    out: *mut TibSteadyStates,
) -> TibStatus {
    guard(|| {
        let args = [detuning, kappa_int, kappa_ext, kerr, photon_flux];
        if args.iter().any(|x| !x.is_finite()) || kappa_int < 0.0 || kappa_ext < 0.0 || photon_flux < 0.0 {
            return Err(Failure(TibStatus::InvalidArgument, format!("bad steady-state arguments {args:?}")));
        }
        let sol = spectroscopy::duffing_steady_states(detuning, kappa_int, kappa_ext, kerr, photon_flux);
        let mut s = TibSteadyStates { count: sol.photon_numbers.len(), photons: [f64::NAN; 3], stable: [0; 3] };
        for (i, (n, st)) in sol.photon_numbers.iter().zip(&sol.stable).enumerate().take(3) {
            s.photons[i] = *n;
            s.stable[i] = *st as u8;
        }
        write(out, s)
    })
}

/// Intracavity photons for an input power P: P/(2πκ·h·f).
#[no_mangle]
pub extern "C" fn tib_photon_number(input_power: f64, kappa_total: f64, frequency: f64) -> f64 {
    spectroscopy::photon_number(input_power, kappa_total, frequency)
}

/// Trace from raw samples.
///
/// # Safety
/// `samples` must point to `len` doubles; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tib_trace_new(
    t0: f64,
    dt: f64,
    samples: *const f64,
    len: usize,
    out: *mut *mut TibTrace,
) -> TibStatus {
    guard(|| {
        if samples.is_null() {
            return Err(null("samples"));
        }
        let data = std::slice::from_raw_parts(samples, len).to_vec();
        let trace = RealTrace::new(t0, dt, data).map_err(|e| Failure(TibStatus::InvalidArgument, e.to_string()))?;
        write(out, Box::into_raw(Box::new(TibTrace { trace })))
    })
}

/// Simulated, ADC-filtered ringdown at `readout` with the device's configured settings.
///
/// # Safety
/// `dev` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tib_ringdown(
    dev: *const TibDevice,
    readout: TibBias,
    stored_photons: f64,
    out: *mut *mut TibTrace,
) -> TibStatus {
    guard(|| {
        let d = deref(dev, "device")?;
        let settings = d.config.ringdown_settings()?;
        let rec = ringdown_protocol(&d.device, bias(readout), stored_photons, &settings)?;
        write(out, Box::into_raw(Box::new(TibTrace { trace: rec.filtered })))
    })
}

/// # Safety
/// `trace` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn tib_trace_len(trace: *const TibTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.trace.len())
}

/// # Safety
/// `trace` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn tib_trace_t0(trace: *const TibTrace) -> f64 {
    trace.as_ref().map_or(f64::NAN, |t| t.trace.t0)
}

/// # Safety
/// `trace` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn tib_trace_dt(trace: *const TibTrace) -> f64 {
    trace.as_ref().map_or(f64::NAN, |t| t.trace.dt)
}

/// Copy the samples into `buf`, which holds `capacity` doubles.
///
/// # Safety
/// `trace` must be a live handle; `buf` must be valid for `capacity` writes.
#[no_mangle]
pub unsafe extern "C" fn tib_trace_copy(trace: *const TibTrace, buf: *mut f64, capacity: usize) -> TibStatus {
    guard(|| {
        let s = deref(trace, "trace")?.trace.samples();
        if buf.is_null() {
            return Err(null("buffer"));
        }
        if capacity < s.len() {
            return Err(Failure(TibStatus::BufferTooSmall, format!("need {} samples, buffer holds {capacity}", s.len())));
        }
        ptr::copy_nonoverlapping(s.as_ptr(), buf, s.len());
        Ok(())
    })
}

/// # Safety
/// `trace` must come from `tib_trace_new` or `tib_ringdown` and not be freed twice. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn tib_trace_free(trace: *mut TibTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// Fit a filtered ringdown with the default fit options.
///
/// # Safety
/// `trace` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tib_fit_ringdown(trace: *const TibTrace, out: *mut TibRingdownFit) -> TibStatus {
    guard(|| {
        let fit = fit_ringdown_with(&deref(trace, "trace")?.trace, &Default::default())?;
        write(
            out,
            TibRingdownFit {
                t0: value(&fit, "t0"),
                kappa: value(&fit, "kappa"),
                gamma_c: value(&fit, "gamma_c"),
                amplitude: value(&fit, "amplitude"),
                converged: fit.converged as u8,
                gamma_c_at_bound: fit.is_at_bound("gamma_c") as u8,
            },
        )
    })
}

/// Run every virtual experiment on the device's configuration and fill the
/// performance summary. Takes a few seconds.
///
/// # Safety
/// `dev` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tib_table1(dev: *const TibDevice, out: *mut TibTable1) -> TibStatus {
    guard(|| {
        let r = run_table1(&deref(dev, "device")?.config)?.report;
        let v = |m: tibsim::protocols::Measured| TibValue { value: m.value, std_error: m.uncertainty };
        write(
            out,
            TibTable1 {
                loss_and_residual_coupling: v(r.loss_and_residual_coupling),
                maximal_coupling: v(r.maximal_coupling),
                on_off_ratio: v(r.on_off_ratio),
                switching_time: v(r.switching_time),
                self_kerr: v(r.self_kerr),
                kappa_int: v(r.kappa_int),
                gamma_c: v(r.gamma_c),
                critical_bias_phi0: r.critical_bias_phi0,
            },
        )
    })
}
