mod common;

use std::sync::OnceLock;

use tibsim::config::Config;
use tibsim::device;
use tibsim::extraction::plateau_kappa_max;
use tibsim::protocols::{render_svg, run_fig2c, run_table1, CsvTable, Measured, PlotKind, PlotSpec, Table1Outputs};

fn outputs() -> &'static Table1Outputs {
    static OUT: OnceLock<Table1Outputs> = OnceLock::new();
    OUT.get_or_init(|| run_table1(&Config::shipped()).unwrap())
}

#[test]
fn internal_loss_recovered_from_reflection_sweeps() {
    let cfg = Config::shipped();
    let configured = cfg.cavity.bare_loss_hz + cfg.cavity.chip_loss_hz;
    let out = outputs();
    assert!(common::rel(out.fig2a.kappa_int(), configured) < 5e-3, "{}", out.fig2a.kappa_int());
    let critical = out.fig2a.critical.fit.value("min_reflection").unwrap();
    assert!(critical < 1e-3, "|Γ| at critical bias {critical}");
}

#[test]
fn plateau_matches_calibrated_coupling() {
    let d = common::shipped_device();
    let on = device::external_coupling(&d, d.operating_point.on_bias()).unwrap();
    let kmax = outputs().report.maximal_coupling.value;
    assert!(common::rel(kmax, on) < 0.02, "{kmax} vs {on}");
}

#[test]
fn plateau_is_insensitive_to_threshold() {
    let out = outputs();
    let points = out.fig2c.plateau_points();
    let kint = out.fig2c.kappa_int.value;
    let reference = plateau_kappa_max(&points, kint, 0.95).unwrap();
    for t in [0.90, 0.91, 0.92, 0.93, 0.94, 0.95, 0.96, 0.97] {
        let k = plateau_kappa_max(&points, kint, t).unwrap();
        assert!(common::rel(k, reference) < 0.02, "threshold {t}: {k} vs {reference}");
    }
}

#[test]
fn delivered_energy_follows_external_share() {
    let mut cfg = Config::shipped();
    let critical = outputs().report.critical_bias_phi0;
    cfg.fig2c.bias_grid_phi0 = vec![0.002, critical, 0.01, 0.03, 0.06, 0.1, 0.12, 0.13];
    let d = cfg.device().unwrap().without_parasitics();
    let kint = cfg.cavity.bare_loss_hz + cfg.cavity.chip_loss_hz;
    let r = run_fig2c(&d, &cfg, Measured::new(kint, 0.0)).unwrap();
    for row in &r.rows {
        let share = row.kappa_ext_model / row.kappa_total_model;
        let ratio = row.energy / row.stored;
        assert!(common::rel(ratio, share) < 0.01, "bias {}: {ratio} vs {share}", row.bias);
        if row.bias == critical {
            assert!((ratio - 0.5).abs() < 0.01, "critical bias delivers {ratio}");
        }
    }
}

#[test]
fn parasitic_loss_drops_energy_beyond_threshold() {
    let out = outputs();
    let ratio = |b: f64| {
        let r = out.fig2c.rows.iter().find(|r| (r.bias - b).abs() < 1e-12).unwrap();
        r.energy / r.stored
    };
    assert!(ratio(0.13) < 0.9 * ratio(0.08));
}

#[test]
fn kerr_sweep_flags_bistability_at_top_powers() {
    let f = &outputs().fig3;
    assert!(!f.points[0].bistable);
    assert!(f.points.last().unwrap().bistable);
    assert!(f.kerr() < 0.0);
}

#[test]
fn plots_are_deterministic() {
    let out = outputs();
    for (kind, table) in [
        (PlotKind::Fig2a, out.fig2a.table()),
        (PlotKind::Fig2b, out.fig2b.table()),
        (PlotKind::Fig2c, out.fig2c.table()),
        (PlotKind::Fig3, out.fig3.table()),
    ] {
        let spec = PlotSpec::for_kind(kind, &table.header);
        let a = render_svg(&table, &spec).unwrap();
        let b = render_svg(&table, &spec).unwrap();
        assert_eq!(a, b);
        assert!(a.starts_with("<svg") || a.starts_with("<?xml"));
    }
}

#[test]
fn written_csvs_reload_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let out = outputs();
    let paths = out.write_all(dir.path()).unwrap();
    assert_eq!(paths.len(), 5);
    let back = CsvTable::load(&dir.path().join("fig2a.csv")).unwrap();
    assert_eq!(back, out.fig2a.table());
}
