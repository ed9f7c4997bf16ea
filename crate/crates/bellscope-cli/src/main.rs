//! `bellscope`: classify, certify, maximize and bound CHSH-scenario behaviors.
//!
//! Exit codes: 0 success, 2 usage or parse error, 3 input rejected by the domain,
//! 4 solver or certificate failure.

mod commands;
mod error;
mod format;
mod manifest;
mod settings;

use bellscope::corrgeom::ClassLabel;
use bellscope::qstrategy::NamedPoint;
use clap::{ArgGroup, Parser, Subcommand};
use commands::{Emit, Merit, Outcome, RobustArgs};
use error::CliError;
use format::Grid;
use manifest::RunManifest;
use settings::Settings;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime};

#[derive(Debug, Parser)]
#[command(
    name = "bellscope",
    version,
    about = "Quantum and no-signaling boundary tools for the CHSH scenario"
)]
struct Cli {
    /// Numerical tolerance for validity checks and zero detection.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Seed recorded in the manifest for randomized work.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// TOML (or .json) file with default `tol` and `seed`.
    #[arg(long, global = true, env = "BELLSCOPE_CONFIG")]
    config: Option<PathBuf>,
    /// Write a run manifest here. Defaults to `<out>.manifest.json` when `--out` is given.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Zero-class and validity of a correlation given as `{"p": 4x4}` JSON.
    Classify {
        /// Input file; stdin when omitted or `-`.
        input: Option<PathBuf>,
    },
    /// Dump a catalog point.
    Named {
        #[arg(long, value_parser = parse_point)]
        point: NamedPoint,
        #[arg(long, value_enum, default_value = "both")]
        emit: Emit,
    },
    /// CHSH maximum over the quantum correlations of a zero-class.
    Maximize {
        #[arg(long = "class", value_parser = parse_class)]
        label: ClassLabel,
        /// Also run a grid scan with this many points per axis.
        #[arg(long)]
        verify_scan: Option<usize>,
    },
    /// CHSH maximum with a maximally entangled state of local dimension D.
    Mes {
        #[arg(long)]
        d: usize,
    },
    /// Non-exposedness certificate of a boundary point.
    CertifyNonexposed {
        #[arg(long, value_parser = parse_point)]
        point: NamedPoint,
    },
    /// Robust self-testing bounds along a CHSH grid.
    Robust {
        #[arg(long, value_parser = parse_point)]
        point: NamedPoint,
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
        /// `A:B:N`, inclusive.
        #[arg(long)]
        chsh_grid: Grid,
        #[arg(long, default_value_t = 3)]
        level: usize,
        #[arg(long, value_enum, default_value = "state")]
        merit: Merit,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Minimum and maximum CHSH along a Bell functional.
    #[command(group(ArgGroup::new("functional").required(true).args(["cells", "coefficients"])))]
    Curve {
        /// Indicator functional as comma-separated `abxy` codes, e.g. `0000,1110,1101`.
        #[arg(long)]
        cells: Option<String>,
        /// JSON file `{"p": 4x4}` of functional coefficients.
        #[arg(long)]
        coefficients: Option<PathBuf>,
        /// `A:B:N`, inclusive.
        #[arg(long)]
        grid: Grid,
        #[arg(long, default_value_t = 1)]
        level: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// CHSH landscape over a class's parameter grid.
    Scan {
        #[arg(long = "class", value_parser = parse_class)]
        label: ClassLabel,
        /// Points per axis.
        #[arg(long, default_value_t = 100)]
        grid: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_point(s: &str) -> Result<NamedPoint, String> {
    s.parse()
        .map_err(|e: bellscope::qstrategy::StrategyError| e.to_string())
}

fn parse_class(s: &str) -> Result<ClassLabel, String> {
    s.parse().map_err(|e: bellscope::corrgeom::CorrError| e.to_string())
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Classify { .. } => "classify",
            Command::Named { .. } => "named",
            Command::Maximize { .. } => "maximize",
            Command::Mes { .. } => "mes",
            Command::CertifyNonexposed { .. } => "certify-nonexposed",
            Command::Robust { .. } => "robust",
            Command::Curve { .. } => "curve",
            Command::Scan { .. } => "scan",
        }
    }
}

fn dispatch(command: Command, settings: &Settings) -> Result<Outcome, CliError> {
    match command {
        Command::Classify { input } => commands::classify(input.as_deref(), settings),
        Command::Named { point, emit } => commands::named(point, emit),
        Command::Maximize { label, verify_scan } => commands::maximize(label, verify_scan),
        Command::Mes { d } => commands::mes(d),
        Command::CertifyNonexposed { point } => commands::certify(point),
        Command::Robust {
            point,
            eps,
            chsh_grid,
            level,
            merit,
            out,
        } => commands::robust(RobustArgs {
            point,
            eps,
            grid: chsh_grid,
            level,
            merit,
            out,
        }),
        Command::Curve {
            cells,
            coefficients,
            grid,
            level,
            out,
        } => {
            let functional = match (cells, coefficients) {
                (Some(list), _) => commands::functional_from_cells(&list)?,
                (None, Some(path)) => commands::functional_from_file(&path)?,
                (None, None) => unreachable!("clap requires one functional source"),
            };
            commands::curve(functional, grid, level, out)
        }
        Command::Scan { label, grid, out } => {
            if grid == 0 {
                return Err(CliError::Usage("grid must be positive".into()));
            }
            commands::scan(label, grid, out)
        }
    }
}

fn emit(outcome: &Outcome) -> Result<(), CliError> {
    match &outcome.out {
        Some(path) => std::fs::write(path, &outcome.primary).map_err(|e| CliError::io(path, e)),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(&outcome.primary)
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Usage(format!("stdout: {e}")))
        }
    }
}

fn manifest_path(explicit: Option<PathBuf>, out: Option<&Path>) -> Option<PathBuf> {
    explicit.or_else(|| {
        out.map(|p| {
            let mut s = p.as_os_str().to_owned();
            s.push(".manifest.json");
            PathBuf::from(s)
        })
    })
}

fn run(cli: Cli, started: SystemTime, clock: Instant) -> Result<(), CliError> {
    let settings = Settings::resolve(cli.config.as_deref(), cli.tol, cli.seed)?;
    let name = cli.command.name();
    let outcome = dispatch(cli.command, &settings)?;
    emit(&outcome)?;
    let exit_code = outcome.failure.as_ref().map_or(0, CliError::code);
    if let Some(path) = manifest_path(cli.manifest, outcome.out.as_deref()) {
        let outputs = outcome
            .out
            .iter()
            .map(|p| manifest::OutputRecord {
                path: p.clone(),
                bytes: outcome.primary.len(),
            })
            .collect();
        RunManifest {
            command: name.to_string(),
            argv: std::env::args().skip(1).collect(),
            parameters: outcome.parameters.clone(),
            tolerances: settings,
            versions: manifest::versions(),
            outputs,
            exit_code,
            timing: manifest::timing(started, clock.elapsed()),
        }
        .write(&path)?;
    }
    match outcome.failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let started = SystemTime::now();
    let clock = Instant::now();
    // clap exits with status 2 on usage errors, matching the contract.
    let cli = Cli::parse();
    match run(cli, started, clock) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bellscope: {e}");
            e.exit_code()
        }
    }
}
