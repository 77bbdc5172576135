//! `stirap` command-line front end.
//!
//! Exit codes: 0 success, 1 configuration or input error, 2 integration
//! failure (norm drift above the limit).

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] stirap::Error),

    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot write {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_integration_failure() => 2,
            _ => 1,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "stirap", version, about = "STIRAP and counter-diabatic field population transfer simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Propagate one scenario; writes trajectory.csv and summary.txt.
    Propagate(Common),
    /// Scan λ, FWHM or η; writes scan_<axis>.csv.
    Scan(ScanArgs),
    /// Print derived pulse figures for the reference scenarios and flag
    /// suspicious dipole moments.
    Validate(Common),
}

#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// Bundled dataset: sccl2 or hcn (or custom with --levels/--tdm).
    #[arg(long)]
    pub dataset: Option<String>,
    /// Run configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Bundled reference configuration by name.
    #[arg(long)]
    pub scenario: Option<String>,
    /// Custom level table (CSV: label,energy_cm1,mode_tag).
    #[arg(long, requires = "tdm")]
    pub levels: Option<PathBuf>,
    /// Custom dipole table (CSV: from,to,tdm_au).
    #[arg(long, requires = "levels")]
    pub tdm: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Time step in atomic units.
    #[arg(long)]
    pub dt_au: Option<f64>,
    /// Counter-diabatic field scale.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Pulse overlap parameter.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Pulse FWHM in ps; amplitudes are rescaled to keep the pulse area.
    #[arg(long)]
    pub fwhm_ps: Option<f64>,
    /// Propagate only these states, e.g. 3,4,5.
    #[arg(long)]
    pub subset: Option<String>,
    /// interaction or schrodinger.
    #[arg(long)]
    pub picture: Option<String>,
    /// Worker threads for scans.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Axis {
    Lambda,
    Fwhm,
    Eta,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Lambda => "lambda",
            Axis::Fwhm => "fwhm",
            Axis::Eta => "eta",
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct ScanArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum)]
    pub axis: Axis,
    /// Grid start (with --to and --step); defaults to a built-in grid.
    #[arg(long, requires_all = ["to", "step"])]
    pub from: Option<f64>,
    #[arg(long, requires_all = ["from", "step"])]
    pub to: Option<f64>,
    #[arg(long, requires_all = ["from", "to"])]
    pub step: Option<f64>,
    /// stirap_plus_cdf or cdf_only (λ scans).
    #[arg(long, default_value = "stirap_plus_cdf")]
    pub mode: String,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Propagate(args) => commands::propagate(&args),
        Command::Scan(args) => commands::scan(&args),
        Command::Validate(args) => commands::validate(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
