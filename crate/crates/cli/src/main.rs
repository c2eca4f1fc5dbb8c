//! `taucalc`: run tau-function computations described by a JSON scenario.
//!
//! Every subcommand writes `<command>.csv` (where it has a table),
//! `<command>.json` (the report) and `<command>.timings.json` into `--out`.
//! Exit status is 0 on success, 2 for a bad scenario, 3 for a numerical
//! failure and 1 when `--verify` finds a check above its tolerance.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tau_cli::{command, execute, RunSettings};

#[derive(Parser)]
#[command(name = "taucalc", version, about = "Tau functions from Toeplitz determinants and Riemann-Hilbert problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Band, winding number, norms and geometric mean of the symbol.
    Symbol(RunArgs),
    /// Finite Toeplitz determinants along the size schedule.
    Dn(RunArgs),
    /// log tau and its flow derivatives on the time lattice.
    Tau(RunArgs),
    /// Factorization residuals and derivative formulas on the time lattice.
    Rh(RunArgs),
    /// Drinfeld-Sokolov tau relation on the time lattice.
    Ds(RunArgs),
}

#[derive(Args, Clone)]
struct RunArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Worker threads for lattice sweeps; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Seed for the randomized checks run by --verify.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Run the identity suite and fail on any tolerance breach.
    #[arg(long)]
    verify: bool,
}

fn main() -> ExitCode {
    env_logger::init();
    let (name, a) = match Cli::parse().command {
        Command::Symbol(a) => ("symbol", a),
        Command::Dn(a) => ("dn", a),
        Command::Tau(a) => ("tau", a),
        Command::Rh(a) => ("rh", a),
        Command::Ds(a) => ("ds", a),
    };
    let settings = RunSettings { scenario: a.scenario, out: a.out, jobs: a.jobs, seed: a.seed, verify: a.verify };
    let run = command(name).expect("every subcommand is registered");
    match execute(name, &settings, run) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("taucalc {name}: {f}");
            ExitCode::from(f.exit_code())
        }
    }
}
