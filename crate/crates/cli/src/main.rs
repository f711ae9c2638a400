//! `prolate`: experiment driver for random sampling of bandlimited functions.

mod commands;
mod output;
mod params;

use std::ffi::OsString;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use params::Params;

#[derive(Debug, Parser)]
#[command(name = "prolate", version, about = "Random sampling of bandlimited functions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Eigenvalues of the time-frequency limiting operator
    Spectrum(Params),
    /// Random members of the concentration class B(R, delta)
    Synth(Params),
    /// Monte Carlo frame-bound experiment
    Frame(Params),
    /// Uniform deviation of the empirical sums over a net
    Deviation(Params),
    /// Poisson void frequencies and empty-cube summability
    Holes(Params),
    /// Pinned-sample counterexample
    Adversarial(Params),
    /// Theory constants and probability bounds
    Bounds(Params),
    /// Density, hole and separation diagnostics of a point set
    Density(Params),
}

#[derive(Debug)]
pub enum Failure {
    Invalid(String),
    Numeric(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Self::Invalid(_) => 2,
            Self::Numeric(_) => 3,
            Self::Io(_) => 1,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Invalid(m) => write!(f, "invalid configuration: {m}"),
            Self::Numeric(m) => write!(f, "numeric failure: {m}"),
            Self::Io(m) => write!(f, "i/o failure: {m}"),
        }
    }
}

impl From<prolate_sampling::Error> for Failure {
    fn from(e: prolate_sampling::Error) -> Self {
        use prolate_sampling::Error as E;
        match e {
            E::InvalidArgument(_) | E::Format(_) => Self::Invalid(e.to_string()),
            E::Numeric(_) | E::Capacity(_) | E::Sampling { .. } => Self::Numeric(e.to_string()),
            E::Io(_) => Self::Io(e.to_string()),
        }
    }
}

type Handler = fn(&Params) -> Result<output::Report, Failure>;

fn run(args: impl IntoIterator<Item = OsString>) -> Result<(), Failure> {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { Err(Failure::Invalid(String::new())) } else { Ok(()) };
        }
    };
    let (handler, params): (Handler, Params) = match cli.command {
        Command::Spectrum(p) => (commands::spectrum, p),
        Command::Synth(p) => (commands::synth, p),
        Command::Frame(p) => (commands::frame, p),
        Command::Deviation(p) => (commands::deviation, p),
        Command::Holes(p) => (commands::holes, p),
        Command::Adversarial(p) => (commands::adversarial, p),
        Command::Bounds(p) => (commands::bounds, p),
        Command::Density(p) => (commands::density, p),
    };
    let params = params.resolve()?;
    handler(&params)?.emit(params.out.as_ref())
}

fn main() -> ExitCode {
    match run(std::env::args_os()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if !matches!(&e, Failure::Invalid(m) if m.is_empty()) {
                eprintln!("prolate: {e}");
            }
            ExitCode::from(e.code())
        }
    }
}
