mod common;

use num_complex::Complex64;
use proptest::prelude::*;

use tibsim::device::{self, BiasPoint, JunctionParams};
use tibsim::extraction::ringdown_shape;
use tibsim::protocols::CsvTable;
use tibsim::spectroscopy::{
    duffing_steady_states, linear_grid, reflection_from_rates, resonance_by_phase_slope, FrequencySweep,
};

fn config() -> ProptestConfig {
    ProptestConfig { cases: 256, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn external_coupling_is_even_in_gradiometric_bias(u in 0.05f64..0.34, g in 0.0f64..0.15) {
        let d = common::shipped_device();
        let plus = device::external_coupling(&d, BiasPoint::new(u, g)).unwrap();
        let minus = device::external_coupling(&d, BiasPoint::new(u, -g)).unwrap();
        prop_assert!((plus - minus).abs() <= 1e-12 * plus.max(1e-300));
        prop_assert_eq!(device::external_coupling(&d, BiasPoint::new(u, 0.0)).unwrap(), 0.0);
    }

    #[test]
    fn squid_inductance_is_even_and_periodic(flux in -0.49f64..0.49, k in -5i32..5) {
        let j = JunctionParams::new(5e-6).unwrap();
        let l = device::squid_inductance(flux, &j).unwrap();
        let mirrored = device::squid_inductance(-flux, &j).unwrap();
        let shifted = device::squid_inductance(flux + k as f64, &j).unwrap();
        prop_assert!(common::rel(mirrored, l) < 1e-12);
        prop_assert!(common::rel(shifted, l) < 1e-9);
    }

    #[test]
    fn phase_slope_resonance_ignores_global_phase(
        ki in 500.0f64..5e3,
        ke in 100.0f64..1e4,
        offset in -0.3f64..0.3,
        phase in -std::f64::consts::PI..std::f64::consts::PI,
    ) {
        let f0 = 5.77e9;
        let kappa = ki + ke;
        let fs = linear_grid(f0 - 4.0 * kappa, f0 + 4.0 * kappa, 301);
        let centre = f0 + offset * kappa;
        let g: Vec<Complex64> = fs.iter().map(|f| reflection_from_rates(centre, ki, ke, *f)).collect();
        let rot = Complex64::from_polar(1.0, phase);
        let bias = BiasPoint::new(0.25, 0.0);
        let a = resonance_by_phase_slope(&FrequencySweep::new(fs.clone(), g.clone(), 0.0, bias).unwrap()).unwrap();
        let b = resonance_by_phase_slope(
            &FrequencySweep::new(fs, g.iter().map(|z| z * rot).collect(), 0.0, bias).unwrap(),
        )
        .unwrap();
        prop_assert!((a - b).abs() < 1e-6 * kappa, "{} vs {}", a, b);
    }

    #[test]
    fn duffing_roots_solve_the_cubic(
        ki in 1e3f64..1e4,
        ke in 1e2f64..1e4,
        kerr in -1.0f64..1.0,
        d in -5.0f64..5.0,
        flux in 1e6f64..1e12,
    ) {
        let kappa = ki + ke;
        let sol = duffing_steady_states(d * kappa, ki, ke, kerr, flux);
        prop_assert!(!sol.photon_numbers.is_empty() && sol.photon_numbers.len() <= 3);
        prop_assert!(sol.photon_numbers.windows(2).all(|w| w[0] < w[1]));
        let source = ke * flux / (2.0 * std::f64::consts::PI);
        for n in &sol.photon_numbers {
            let lhs = n * ((d * kappa - kerr * n).powi(2) + kappa * kappa / 4.0);
            prop_assert!((lhs - source).abs() <= 1e-9 * source, "{} vs {}", lhs, source);
        }
    }

    #[test]
    fn ringdown_shape_is_rate_symmetric_and_starts_at_zero(
        a in 1e5f64..1e8,
        ratio in 1.01f64..100.0,
        tau in 1e-10f64..1e-6,
    ) {
        let g = a * ratio;
        prop_assert_eq!(ringdown_shape(0.0, 1.0, a, g), 0.0);
        let lhs = ringdown_shape(tau, 1.0, a, g) / g;
        let rhs = ringdown_shape(tau, 1.0, g, a) / a;
        prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1e-300));
    }

    #[test]
    fn cavity_frequency_is_even_in_gradiometric_bias(g in 0.0f64..0.15) {
        let d = common::shipped_device();
        let u = d.operating_point.uniform;
        let plus = device::cavity_frequency(&d, BiasPoint::new(u, g)).unwrap();
        let minus = device::cavity_frequency(&d, BiasPoint::new(u, -g)).unwrap();
        prop_assert!((plus - minus).abs() < 1e-6);
    }

    #[test]
    fn csv_round_trip_preserves_every_bit(rows in prop::collection::vec(prop::collection::vec(any::<f64>(), 3), 1..20)) {
        let t = CsvTable::new(&["a", "b", "c"], rows);
        let mut buf = Vec::new();
        t.write(&mut buf).unwrap();
        let back = CsvTable::read(&buf[..]).unwrap();
        prop_assert_eq!(&back.header, &t.header);
        for (r, s) in back.rows.iter().zip(&t.rows) {
            for (x, y) in r.iter().zip(s) {
                prop_assert!(x.to_bits() == y.to_bits() || (x.is_nan() && y.is_nan()), "{} vs {}", x, y);
            }
        }
    }
}
