use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use tibsim_ffi::*;

fn default_device() -> *mut TibDevice {
    let mut dev = ptr::null_mut();
    assert_eq!(unsafe { tib_device_new_default(&mut dev) }, TibStatus::Ok);
    assert!(!dev.is_null());
    dev
}

fn last_error() -> String {
    let p = tib_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn device_queries_match_calibration() {
    let dev = default_device();
    let mut on = TibBias { uniform: 0.0, gradiometric: 0.0 };
    let mut ke = 0.0;
    let mut ki = 0.0;
    let mut k = 0.0;
    let mut kerr = 0.0;
    let mut f = 0.0;
    unsafe {
        assert_eq!(tib_device_on_bias(dev, &mut on), TibStatus::Ok);
        assert_eq!(tib_external_coupling(dev, on, &mut ke), TibStatus::Ok);
        assert_eq!(tib_internal_loss(dev, on, &mut ki), TibStatus::Ok);
        assert_eq!(tib_kappa_total(dev, on, &mut k), TibStatus::Ok);
        assert_eq!(tib_self_kerr(dev, on, &mut kerr), TibStatus::Ok);
        assert_eq!(tib_cavity_frequency(dev, on, &mut f), TibStatus::Ok);
    }
    assert!((ke / 1.96e6 - 1.0).abs() < 1e-9);
    assert!((k - ke - ki).abs() < 1e-6);
    assert!(kerr < 0.0);
    assert!(f > 5.7e9 && f < 5.78e9);

    let balanced = TibBias { uniform: on.uniform, gradiometric: 0.0 };
    unsafe { assert_eq!(tib_external_coupling(dev, balanced, &mut ke), TibStatus::Ok) };
    assert_eq!(ke, 0.0);
    let mut g = TibComplex { re: 0.0, im: 0.0 };
    unsafe { assert_eq!(tib_reflection_linear(dev, balanced, 5.77e9, &mut g), TibStatus::Ok) };
    assert!((g.re.hypot(g.im) - 1.0).abs() < 1e-12);
    unsafe { tib_device_free(dev) };
}

#[test]
fn configuration_text_round_trips() {
    let text = CString::new(tibsim::config::DEFAULT_CONFIG).unwrap();
    let mut dev = ptr::null_mut();
    assert_eq!(unsafe { tib_device_from_toml(text.as_ptr(), &mut dev) }, TibStatus::Ok);
    let reference = default_device();
    let b = TibBias { uniform: 0.25, gradiometric: 0.03 };
    let (mut a, mut r) = (0.0, 0.0);
    unsafe {
        tib_external_coupling(dev, b, &mut a);
        tib_external_coupling(reference, b, &mut r);
        tib_device_free(dev);
        tib_device_free(reference);
    }
    assert_eq!(a, r);
}

#[test]
fn errors_carry_status_and_message() {
    let bad = CString::new("[cavity]\nbare_frequency_hz = -1\n").unwrap();
    let mut dev = ptr::null_mut();
    assert_eq!(unsafe { tib_device_from_toml(bad.as_ptr(), &mut dev) }, TibStatus::Config);
    assert!(dev.is_null());
    assert!(!last_error().is_empty());

    let mut out = 0.0;
    let b = TibBias { uniform: 0.25, gradiometric: 0.0 };
    assert_eq!(unsafe { tib_external_coupling(ptr::null(), b, &mut out) }, TibStatus::NullPointer);
    assert!(last_error().contains("device"));

    let d = default_device();
    let singular = TibBias { uniform: 0.5, gradiometric: 0.0 };
    assert_eq!(unsafe { tib_cavity_frequency(d, singular, &mut out) }, TibStatus::Device);
    assert_eq!(unsafe { tib_external_coupling(d, b, ptr::null_mut()) }, TibStatus::NullPointer);
    assert_eq!(unsafe { tib_external_coupling(d, b, &mut out) }, TibStatus::Ok);
    assert!(tib_last_error_message().is_null());
    unsafe { tib_device_free(d) };
    unsafe { tib_device_free(ptr::null_mut()) };
}

#[test]
fn steady_states_report_bistability() {
    let (ki, ke, kerr): (f64, f64, f64) = (1730.0, 1730.0, -0.04);
    let half = (ki + ke) / 2.0;
    // detuned well past the fold on the Kerr side, drive inside the window
    let detuning = -3.0 * half;
    let mut s = TibSteadyStates { count: 0, photons: [0.0; 3], stable: [0; 3] };
    let mut found = false;
    for scale in [1.0, 2.0, 3.0, 4.0, 5.0, 6.0] {
        let flux = 2.0 * std::f64::consts::PI * scale * half.powi(3) / kerr.abs() / ke;
        assert_eq!(unsafe { tib_duffing_steady_states(detuning, ki, ke, kerr, flux, &mut s) }, TibStatus::Ok);
        if s.count == 3 {
            found = true;
            assert_eq!(s.stable, [1, 0, 1]);
            assert!(s.photons[0] < s.photons[1] && s.photons[1] < s.photons[2]);
        }
    }
    assert!(found);
    assert_eq!(
        unsafe { tib_duffing_steady_states(f64::NAN, ki, ke, kerr, 1.0, &mut s) },
        TibStatus::InvalidArgument
    );
    let n = tib_photon_number(1e-15, 3460.0, 5.77e9);
    assert!((n - tibsim::spectroscopy::photon_number(1e-15, 3460.0, 5.77e9)).abs() < 1e-12);
}

#[test]
fn ringdown_trace_and_fit() {
    let dev = default_device();
    let mut on = TibBias { uniform: 0.0, gradiometric: 0.0 };
    let mut trace = ptr::null_mut();
    let mut k = 0.0;
    unsafe {
        tib_device_on_bias(dev, &mut on);
        tib_kappa_total(dev, on, &mut k);
        assert_eq!(tib_ringdown(dev, on, 8000.0, &mut trace), TibStatus::Ok);
    }
    let len = unsafe { tib_trace_len(trace) };
    assert!(len > 100);
    assert_eq!(unsafe { tib_trace_dt(trace) }, 1e-9);
    let mut small = vec![0.0; 4];
    assert_eq!(unsafe { tib_trace_copy(trace, small.as_mut_ptr(), small.len()) }, TibStatus::BufferTooSmall);
    let mut buf = vec![0.0; len];
    assert_eq!(unsafe { tib_trace_copy(trace, buf.as_mut_ptr(), len) }, TibStatus::Ok);
    assert!(buf.iter().any(|v| *v > 0.0));

    let mut fit = std::mem::MaybeUninit::<TibRingdownFit>::uninit();
    assert_eq!(unsafe { tib_fit_ringdown(trace, fit.as_mut_ptr()) }, TibStatus::Ok);
    let fit = unsafe { fit.assume_init() };
    assert_eq!(fit.converged, 1);
    assert!((fit.kappa.value / k - 1.0).abs() < 0.02);
    assert!((fit.gamma_c.value / 48e6 - 1.0).abs() < 0.1);

    // the copied samples rebuild an equivalent trace
    let mut copy = ptr::null_mut();
    let t0 = unsafe { tib_trace_t0(trace) };
    assert_eq!(unsafe { tib_trace_new(t0, 1e-9, buf.as_ptr(), len, &mut copy) }, TibStatus::Ok);
    assert_eq!(unsafe { tib_trace_len(copy) }, len);
    assert_eq!(unsafe { tib_trace_new(0.0, -1.0, buf.as_ptr(), len, &mut copy) }, TibStatus::InvalidArgument);
    unsafe {
        tib_trace_free(copy);
        tib_trace_free(trace);
        tib_device_free(dev);
    }
}

#[test]
fn table1_through_the_abi() {
    let dev = default_device();
    let mut t = std::mem::MaybeUninit::<TibTable1>::uninit();
    assert_eq!(unsafe { tib_table1(dev, t.as_mut_ptr()) }, TibStatus::Ok);
    let t = unsafe { t.assume_init() };
    assert!((t.loss_and_residual_coupling.value / 1280.0 - 1.0).abs() < 0.01);
    assert!((t.maximal_coupling.value / 1.96e6 - 1.0).abs() < 0.02);
    assert!((t.self_kerr.value / -0.04 - 1.0).abs() < 0.1);
    unsafe { tib_device_free(dev) };
}

fn header() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/tibsim.h")
}

#[test]
fn header_compiles_and_links_from_c() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let src = dir.join("probe.c");
    std::fs::write(
        &src,
        r#"#include <stdio.h>
#include "tibsim.h"
int main(void) {
    TibDevice *dev = NULL;
    if (tib_device_new_default(&dev) != TIB_STATUS_OK) return 1;
    TibBias on;
    double ke = 0.0;
    if (tib_device_on_bias(dev, &on) != TIB_STATUS_OK) return 2;
    if (tib_external_coupling(dev, on, &ke) != TIB_STATUS_OK) return 3;
    if (tib_external_coupling(NULL, on, &ke) != TIB_STATUS_NULL_POINTER) return 4;
    if (tib_last_error_message() == NULL) return 5;
    printf("%.6e\n", ke);
    tib_device_free(dev);
    return 0;
}
"#,
    )
    .unwrap();
    // the static library sits next to the deps directory holding this test
    let exe = std::env::current_exe().unwrap();
    let lib_dir = exe.parent().unwrap().parent().unwrap();
    assert!(lib_dir.join("libtibsim_ffi.a").exists(), "no static library in {}", lib_dir.display());
    let bin = dir.join("probe");
    let cc = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(header().parent().unwrap())
        .arg(lib_dir.join("libtibsim_ffi.a"))
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .output()
        .unwrap();
    assert!(cc.status.success(), "{}", String::from_utf8_lossy(&cc.stderr));
    let run = Command::new(&bin).output().unwrap();
    assert!(run.status.success(), "probe exited with {:?}", run.status.code());
    let ke: f64 = String::from_utf8_lossy(&run.stdout).trim().parse().unwrap();
    assert!((ke / 1.96e6 - 1.0).abs() < 1e-6);
}

#[test]
fn header_is_valid_cpp() {
    let out = Command::new("c++")
        .args(["-fsyntax-only", "-x", "c++"])
        .arg(header())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
