use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::{io_err, run_fig2a, run_fig2b, run_fig2c, run_fig3, Fig2aResult, Fig2bResult, Fig2cResult, Fig3Result, ProtocolError};
use crate::config::Config;
use crate::csvfmt::fmt_real;

/// A value with its one-sigma uncertainty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measured {
    pub value: f64,
    pub uncertainty: f64,
}

impl Measured {
    pub fn new(value: f64, uncertainty: f64) -> Self {
        Self { value, uncertainty }
    }

    pub fn relative(&self) -> f64 {
        self.uncertainty / self.value.abs()
    }
}

/// The five figures of merit of the coupler.
#[derive(Debug, Clone, PartialEq)]
pub struct Table1Report {
    /// Internal loss beyond the bare cavity, Hz.
    pub loss_and_residual_coupling: Measured,
    /// Hz.
    pub maximal_coupling: Measured,
    pub on_off_ratio: Measured,
    /// Upper bound set by the detection bandwidth, s.
    pub switching_time: Measured,
    /// Hz per photon.
    pub self_kerr: Measured,
    pub kappa_int: Measured,
    pub gamma_c: Measured,
    pub critical_bias_phi0: f64,
}

const ROWS: [(&str, &str); 5] = [
    ("loss_and_residual_coupling", "Hz"),
    ("maximal_coupling", "Hz"),
    ("on_off_ratio", ""),
    ("switching_time", "s"),
    ("self_kerr", "Hz/photon"),
];

impl Table1Report {
    fn rows(&self) -> [Measured; 5] {
        [
            self.loss_and_residual_coupling,
            self.maximal_coupling,
            self.on_off_ratio,
            self.switching_time,
            self.self_kerr,
        ]
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "Performance summary");
        let _ = writeln!(s, "uncertainties: one-sigma, from fit covariance");
        let _ = writeln!(s);
        let _ = writeln!(s, "{:<28} {:>24} {:>24}  unit", "quantity", "value", "uncertainty");
        for ((name, unit), m) in ROWS.iter().zip(self.rows()) {
            let _ = writeln!(s, "{:<28} {:>24} {:>24}  {}", name, fmt_real(m.value), fmt_real(m.uncertainty), unit);
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "{:<28} {:>24} {:>24}  Hz", "kappa_int", fmt_real(self.kappa_int.value), fmt_real(self.kappa_int.uncertainty));
        let _ = writeln!(s, "{:<28} {:>24} {:>24}  Hz", "gamma_c", fmt_real(self.gamma_c.value), fmt_real(self.gamma_c.uncertainty));
        let _ = writeln!(s, "{:<28} {:>24}", "critical_bias_phi0", fmt_real(self.critical_bias_phi0));
        s
    }
}

#[derive(Debug, Clone)]
pub struct Table1Outputs {
    pub report: Table1Report,
    pub fig2a: Fig2aResult,
    pub fig2b: Fig2bResult,
    pub fig2c: Fig2cResult,
    pub fig3: Fig3Result,
}

impl Table1Outputs {
    pub fn write_all(&self, dir: &Path) -> Result<Vec<PathBuf>, ProtocolError> {
        let mut written = Vec::new();
        for (name, table) in [
            ("fig2a.csv", self.fig2a.table()),
            ("fig2b.csv", self.fig2b.table()),
            ("fig2c.csv", self.fig2c.table()),
            ("fig3.csv", self.fig3.table()),
        ] {
            let path = dir.join(name);
            table.save(&path)?;
            written.push(path);
        }
        let path = dir.join("table1.txt");
        std::fs::write(&path, self.report.to_text()).map_err(io_err(format!("writing {}", path.display())))?;
        written.push(path);
        Ok(written)
    }
}

/// Run every experiment on the configured device and assemble the report.
pub fn run_table1(cfg: &Config) -> Result<Table1Outputs, ProtocolError> {
    let device = cfg.device()?;
    let fig2a = run_fig2a(&device, &cfg.fig2a)?;
    let kappa_int = Measured::new(fig2a.kappa_int(), fig2a.kappa_int_error());
    let (fig2c, (fig2b, fig3)) = rayon::join(
        || run_fig2c(&device, cfg, kappa_int),
        || {
            rayon::join(
                || run_fig2b(&device, cfg),
                || run_fig3(&device, fig2a.critical.bias, fig2a.kappa(), cfg),
            )
        },
    );
    let (fig2c, fig2b, fig3) = (fig2c?, fig2b?, fig3?);
    let bare = cfg.cavity.bare_loss_hz;
    let g = fig2c.gamma_c;
    let omega_c = 2.0 * std::f64::consts::PI * g.value;
    let report = Table1Report {
        loss_and_residual_coupling: Measured::new(kappa_int.value - bare, kappa_int.uncertainty),
        maximal_coupling: fig2c.kappa_max,
        on_off_ratio: fig2c.on_off_ratio,
        switching_time: Measured::new(1.0 / omega_c, g.relative() / omega_c),
        self_kerr: Measured::new(fig3.kerr(), fig3.fit.std_error("kerr_hz_per_photon").unwrap_or(f64::NAN)),
        kappa_int,
        gamma_c: g,
        critical_bias_phi0: fig2a.critical.bias.gradiometric,
    };
    Ok(Table1Outputs { report, fig2a, fig2b, fig2c, fig3 })
}
