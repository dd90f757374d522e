//! `ttstar`: reproducible experiments on the tt*-Toda equations.
//!
//! Exit codes: 0 success, 1 numerical or I/O failure, 2 input or domain
//! error, 3 blow-up, 4 verification failure.

mod commands;
mod json;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ttstar_core::Error;

#[derive(Debug, Parser)]
#[command(name = "ttstar", version, about = "Numerics for the tt*-Toda equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Asymptotic data, monodromy data and the global-solution ρ.
    Maps(MapsArgs),
    /// Trajectory CSV: the global solution, or a forward integration when --rho is given.
    Solve(SolveArgs),
    /// log τ and the classical action along a global solution (n = 3).
    Tau(TauArgs),
    /// Numerical and closed-form normalisation constant (n = 3).
    Constant(ConstantArgs),
    /// Randomised property suites.
    Verify(VerifyArgs),
}

/// Comma-separated reduced list.
#[derive(Debug, Clone)]
struct List(Vec<f64>);

fn parse_list(s: &str) -> Result<List, String> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("`{t}` is not a finite number"))
        })
        .collect::<Result<_, _>>()
        .map(List)
}

#[derive(Debug, Args)]
struct Output {
    /// Write to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Omit the timestamp so identical inputs give identical bytes.
    #[arg(long)]
    reproducible: bool,
}

#[derive(Debug, Args)]
struct Tolerances {
    #[arg(long)]
    rel_tol: Option<f64>,
    #[arg(long)]
    abs_tol: Option<f64>,
}

#[derive(Debug, Args)]
struct MapsArgs {
    #[arg(long)]
    n: usize,
    /// Reduced γ, comma separated.
    #[arg(long, value_parser = parse_list, allow_hyphen_values = true)]
    gamma: List,
    /// Reduced ρ; defaults to the global-solution value.
    #[arg(long, value_parser = parse_list, allow_hyphen_values = true)]
    rho: Option<List>,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[arg(long, default_value_t = 3)]
    n: usize,
    #[arg(long, value_parser = parse_list, allow_hyphen_values = true)]
    gamma: List,
    /// Start from the leading-order asymptotics with this ρ and integrate forward.
    #[arg(long, value_parser = parse_list, allow_hyphen_values = true)]
    rho: Option<List>,
    #[arg(long, default_value_t = 0.01)]
    x0: f64,
    #[arg(long, default_value_t = 6.0)]
    x1: f64,
    #[command(flatten)]
    tol: Tolerances,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TauArgs {
    #[arg(long, default_value_t = 3)]
    n: usize,
    #[arg(long, value_parser = parse_list, allow_hyphen_values = true)]
    gamma: List,
    #[arg(long, default_value_t = 0.01)]
    x1: f64,
    #[arg(long, default_value_t = 6.0)]
    x2: f64,
    #[command(flatten)]
    tol: Tolerances,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct ConstantArgs {
    #[arg(long, default_value_t = 3)]
    n: usize,
    #[arg(long, value_parser = parse_list, allow_hyphen_values = true)]
    gamma: List,
    /// Largest point of the x₁ grid {x₁, x₁/2, x₁/4}.
    #[arg(long, default_value_t = 1e-2)]
    x1: f64,
    #[arg(long, default_value_t = 7.0)]
    x2: f64,
    /// Exit 4 when |c_numeric − c_closed| exceeds this.
    #[arg(long, default_value_t = 1e-2)]
    threshold: f64,
    #[command(flatten)]
    tol: Tolerances,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// One of specfun, genfun, symplectic, dynamics.
    #[arg(long)]
    suite: String,
    #[arg(long, default_value_t = 3)]
    n: usize,
    #[arg(long, default_value_t = 50)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Overrides the threshold of every gating check.
    #[arg(long)]
    threshold: Option<f64>,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug)]
enum Failure {
    Input(String),
    BlowUp(String),
    Verification(String),
    Other(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Other(_) => 1,
            Failure::Input(_) => 2,
            Failure::BlowUp(_) => 3,
            Failure::Verification(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::BlowUp(m) | Failure::Verification(m) | Failure::Other(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::Domain { .. }
            | Error::Genericity(_)
            | Error::Shape { .. }
            | Error::Parameter(_)
            | Error::Unsupported(_) => Failure::Input(msg),
            Error::BlowUp { .. } => Failure::BlowUp(msg),
            _ => Failure::Other(msg),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Other(format!("i/o error: {e}"))
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Other(format!("serialization error: {e}"))
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("TTSTAR_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Maps(a) => commands::maps(&a),
        Command::Solve(a) => commands::solve(&a),
        Command::Tau(a) => commands::tau(&a),
        Command::Constant(a) => commands::constant(&a),
        Command::Verify(a) => verify::run(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("ttstar: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
