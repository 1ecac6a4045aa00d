#![allow(dead_code)]

pub mod oracle;

use tibsim::config::Config;
use tibsim::device::{CavityParams, DeviceParams, JunctionParams, OperatingPoint, TibBridge};

pub fn shipped_device() -> DeviceParams {
    Config::shipped().device().unwrap()
}

/// Calibrated shipped device with custom circuit parameters.
pub fn device_with(participation: f64, n_squids: u32, critical_current: f64, uniform: f64) -> DeviceParams {
    let raw = DeviceParams::new(
        CavityParams::new(5.772e9, 450.0, 1280.0, participation).unwrap(),
        TibBridge::symmetric(n_squids, JunctionParams::new(critical_current).unwrap(), 1.0).unwrap(),
        OperatingPoint { uniform, on_gradiometric: 0.1 },
        50.0,
        None,
    )
    .unwrap();
    tibsim::device::calibrate_coupling_scale(&raw, raw.operating_point.on_bias(), 1.96e6).unwrap()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}
