//! `pulsed-epr`: simulate and optimize pulsed optomechanical entanglement
//! from the command line.

mod commands;
mod config;
mod output;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use output::Format;

#[derive(Debug, Parser)]
#[command(name = "pulsed-epr", version, about = "Pulsed optomechanical EPR entanglement: simulation and optimization")]
struct Cli {
    /// JSON run configuration (frequencies in Hz).
    #[arg(long, env = "PULSED_EPR_CONFIG", global = true)]
    config: Option<PathBuf>,
    /// Directory for emitted files [default: .]
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Which files to emit [default: both]
    #[arg(long, value_enum, global = true)]
    format: Option<Format>,
    /// More log output on stderr (repeatable).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form two-mode squeezing: EPR variance and teleportation fidelity.
    Ideal(IdealArgs),
    /// Full linearized pulse dynamics at one parameter point.
    Dynamics(DynamicsArgs),
    /// Minimize the EPR variance over (epsilon, eta, xi).
    Optimize(OptimizeArgs),
    /// Optimize along a logarithmic grid of bath occupations.
    Sweep(SweepArgs),
    /// Classical amplitudes under a shaped pulse and the adiabaticity checks.
    AppendixValidate(AppendixArgs),
    /// Re-derive the three reference operating points and compare.
    Table1,
}

#[derive(Debug, Args, Serialize)]
struct IdealArgs {
    /// Squeezing parameter G*tau.
    #[arg(long)]
    r: Option<f64>,
    /// Initial mechanical occupation [default: 0]
    #[arg(long)]
    n0: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Sideband {
    Blue,
    Red,
}

#[derive(Debug, Args, Serialize)]
struct DynamicsArgs {
    /// Cavity linewidth over mechanical frequency.
    #[arg(long)]
    eta: Option<f64>,
    /// Coupling over linewidth.
    #[arg(long)]
    xi: Option<f64>,
    /// Mechanical damping rate times pulse length.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Bath occupation.
    #[arg(long)]
    n_bar: Option<f64>,
    /// Initial mechanical occupation.
    #[arg(long)]
    n0: Option<f64>,
    /// Mechanical quality factor.
    #[arg(long)]
    q: Option<f64>,
    /// Drive sideband for dimensionless input [default: blue]
    #[arg(long, value_enum)]
    detuning: Option<Sideband>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Convention {
    Angular,
    Cyclic,
}

#[derive(Debug, Args, Serialize)]
struct OptimizeArgs {
    #[arg(long)]
    n_bar: Option<f64>,
    /// [default: 0]
    #[arg(long)]
    n0: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    /// Mechanical frequency in Hz, for the derived operating point.
    #[arg(long)]
    f_m: Option<f64>,
    /// Single-photon coupling in Hz, for the derived operating point.
    #[arg(long)]
    g0: Option<f64>,
    /// Laser wavelength in m, for the mean power.
    #[arg(long)]
    wavelength: Option<f64>,
    /// How rates become pulse lengths and photon numbers [default: angular]
    #[arg(long, value_enum)]
    convention: Option<Convention>,
    /// Also minimize over the output-mode rate.
    #[arg(long)]
    rate_search: bool,
}

#[derive(Debug, Args, Serialize)]
struct SweepArgs {
    /// [default: 0]
    #[arg(long)]
    n0: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    /// [default: 1]
    #[arg(long)]
    n_bar_min: Option<f64>,
    /// [default: 1e6]
    #[arg(long)]
    n_bar_max: Option<f64>,
    /// Number of grid points [default: 25]
    #[arg(long)]
    count: Option<usize>,
    /// Run both published scenarios, one file pair each.
    #[arg(long)]
    figure2: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Shape {
    RaisedCosine,
    Step,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum DetuningMode {
    Locked,
    Free,
}

#[derive(Debug, Args, Serialize)]
struct AppendixArgs {
    /// Fraction of tau taken by each ramp [default: 0.1]
    #[arg(long)]
    ramp_fraction: Option<f64>,
    /// Samples on [0, tau] [default: 2001]
    #[arg(long)]
    points: Option<usize>,
    /// [default: raised-cosine]
    #[arg(long, value_enum)]
    shape: Option<Shape>,
    /// [default: locked]
    #[arg(long, value_enum)]
    detuning_mode: Option<DetuningMode>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorKind {
    Usage,
    Config,
    Io,
    Computation,
}

#[derive(Debug, Clone, Serialize)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    pub fn usage(m: impl Into<String>) -> Self {
        CliError { kind: ErrorKind::Usage, message: m.into() }
    }

    pub fn config(m: impl Into<String>) -> Self {
        CliError { kind: ErrorKind::Config, message: m.into() }
    }

    pub fn io(m: impl Into<String>) -> Self {
        CliError { kind: ErrorKind::Io, message: m.into() }
    }

    fn exit_code(&self) -> u8 {
        match self.kind {
            ErrorKind::Computation => 1,
            ErrorKind::Usage | ErrorKind::Config => 2,
            ErrorKind::Io => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<pulsed_epr::Error> for CliError {
    fn from(e: pulsed_epr::Error) -> Self {
        CliError { kind: ErrorKind::Computation, message: e.to_string() }
    }
}

fn fail(err: &CliError) -> ExitCode {
    let doc = serde_json::json!({ "error": err });
    eprintln!("{doc}");
    ExitCode::from(err.exit_code())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind as K;
            if matches!(e.kind(), K::DisplayHelp | K::DisplayVersion | K::DisplayHelpOnMissingArgumentOrSubcommand) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            return fail(&CliError::usage(e.render().to_string().trim_end()));
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}
