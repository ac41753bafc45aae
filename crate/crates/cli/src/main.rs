#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod manifest;

use commands::Failure;

#[derive(Parser, Debug)]
#[command(name = "revival", version, about = "Qubit-oscillator visibility: closed forms, simulation, witness suite and experiment design")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate a closed-form visibility curve.
    Analytic(AnalyticArgs),
    /// Integrate the master equation for a protocol.
    Simulate(SimulateArgs),
    /// Run the separable-channel monotonicity suite.
    Verify(VerifyArgs),
    /// Evaluate laboratory design numbers.
    Design(DesignArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Formula {
    Ground,
    Thermal,
    Damped,
    Boosted,
    ManyAtom,
    SpinEcho,
}

#[derive(Args, Debug)]
pub struct AnalyticArgs {
    #[arg(long, value_enum)]
    pub formula: Formula,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: f64,
    #[arg(long)]
    pub lambda_prime: Option<f64>,
    #[arg(long)]
    pub nbar: Option<f64>,
    /// Mechanical quality factor ω/γ_m.
    #[arg(long)]
    pub q: Option<f64>,
    /// Atomic dephasing rate in units of ω.
    #[arg(long)]
    pub gamma_a: Option<f64>,
    #[arg(long)]
    pub n_atoms: Option<u64>,
    #[arg(long)]
    pub n_pi: Option<u32>,
    /// Curve length in periods 2π/ω.
    #[arg(long, default_value_t = 2.0)]
    pub t_max: f64,
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    /// Output CSV; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProtocolArg {
    Basic,
    Boosted,
    SpinEcho,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the `protocol` key of the configuration.
    #[arg(long, value_enum)]
    pub protocol: Option<ProtocolArg>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long)]
    pub seeds: u64,
    #[arg(long, default_value_t = 16)]
    pub dim: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Evolution time per channel, in units of 2π.
    #[arg(long, default_value_t = 2.0)]
    pub periods: f64,
    /// Summary CSV (seed, monotonic, max_violation, negativity_peak).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct DesignArgs {
    /// key = value file in SI units; reference values when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, conflicts_with = "sweep", required_unless_present = "sweep")]
    pub point: bool,
    #[arg(long)]
    pub sweep: bool,
    /// Hold-time axis `lo,hi,n` in seconds.
    #[arg(long, default_value = "1,1000,50", requires = "sweep")]
    pub tau_range: String,
    /// Temperature axis `lo,hi,n` in kelvin.
    #[arg(long, default_value = "0.01,300,50", requires = "sweep")]
    pub temp_range: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analytic(a) => commands::analytic(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::Verify(a) => commands::verify(&a),
        Command::Design(a) => commands::design(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure { code, message }) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}
