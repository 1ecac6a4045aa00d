use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use tibsim::config::ConfigError;
use tibsim::protocols::{emit_plot, CsvTable, ExperimentKind, ExperimentSpec, PlotKind, PlotSpec, ProtocolError};

/// Environment variable overriding the output directory.
const OUTPUT_DIR_ENV: &str = "TIBSIM_OUTPUT_DIR";

#[derive(Parser)]
#[command(name = "tibsim", version, about = "Cavity + SQUID-bridge coupler simulator and parameter extraction")]
struct Cli {
    /// Configuration file (TOML); the shipped default is used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides $TIBSIM_OUTPUT_DIR. Defaults to ./output.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one virtual experiment and write its CSV.
    Simulate {
        #[command(subcommand)]
        experiment: Experiment,
    },
    /// Run every experiment and write the performance summary.
    Report {
        #[command(subcommand)]
        report: Report,
    },
    /// Render an experiment CSV as SVG.
    Plot {
        csv: PathBuf,
        #[arg(long, value_enum)]
        kind: Kind,
        /// Output file; defaults to the CSV path with an .svg extension.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum Experiment {
    /// Reflection sweeps near critical coupling (fig2a.csv).
    Reflection {
        /// Comma-separated gradiometric biases, Φ₀.
        #[arg(long, value_delimiter = ',')]
        bias_grid: Option<Vec<f64>>,
    },
    /// Ringdowns across the coupling range (fig2c.csv, fig2b.csv).
    Ringdown {
        #[arg(long, value_delimiter = ',')]
        bias_grid: Option<Vec<f64>>,
    },
    /// Power-dependent resonance shift at critical coupling (fig3.csv).
    Kerr {
        #[arg(long)]
        power_start_w: Option<f64>,
        #[arg(long)]
        power_stop_w: Option<f64>,
        #[arg(long)]
        power_points: Option<usize>,
    },
}

#[derive(Subcommand)]
enum Report {
    Table1,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Fig2a,
    Fig2b,
    Fig2c,
    Fig3,
}

enum Failure {
    Config(String),
    Numerical(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<ProtocolError> for Failure {
    fn from(e: ProtocolError) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Config(e.to_string())
        }
    }
}

fn output_dir(cli: &Cli) -> PathBuf {
    cli.output_dir
        .clone()
        .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("output"))
}

fn run(cli: Cli) -> Result<(), Failure> {
    let dir = output_dir(&cli);
    let spec = |kind| ExperimentSpec::new(kind, cli.config.clone(), dir.clone());
    let spec = match &cli.command {
        Command::Simulate { experiment: Experiment::Reflection { bias_grid } } => {
            let s = spec(ExperimentKind::ReflectionSweep)?;
            match bias_grid {
                Some(g) => s.with_bias_grid(g.clone())?,
                None => s,
            }
        }
        Command::Simulate { experiment: Experiment::Ringdown { bias_grid } } => {
            let s = spec(ExperimentKind::RingdownSweep)?;
            match bias_grid {
                Some(g) => s.with_bias_grid(g.clone())?,
                None => s,
            }
        }
        Command::Simulate { experiment: Experiment::Kerr { power_start_w, power_stop_w, power_points } } => {
            let s = spec(ExperimentKind::KerrSweep)?;
            let f = &s.config.fig3;
            let (a, b, n) = (
                power_start_w.unwrap_or(f.power_start_w),
                power_stop_w.unwrap_or(f.power_stop_w),
                power_points.unwrap_or(f.power_points),
            );
            s.with_power_grid(a, b, n)?
        }
        Command::Report { report: Report::Table1 } => spec(ExperimentKind::Table1)?,
        Command::Plot { csv, kind, out } => {
            let kind = match kind {
                Kind::Fig2a => PlotKind::Fig2a,
                Kind::Fig2b => PlotKind::Fig2b,
                Kind::Fig2c => PlotKind::Fig2c,
                Kind::Fig3 => PlotKind::Fig3,
            };
            let table = CsvTable::load(csv)?;
            let out = out.clone().unwrap_or_else(|| csv.with_extension("svg"));
            emit_plot(csv, &PlotSpec::for_kind(kind, &table.header), &out)
                .map_err(|e| Failure::Config(e.to_string()))?;
            println!("{}", out.display());
            return Ok(());
        }
    };
    for path in spec.run()? {
        println!("{}", path.display());
    }
    if spec.kind == ExperimentKind::Table1 {
        let text = std::fs::read_to_string(spec.output_dir.join("table1.txt"))
            .map_err(|e| Failure::Config(e.to_string()))?;
        print!("{text}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(2)
        }
    }
}
