//! `shocklab`: command-line front end for the shock-wave toolkit.
//!
//! Exit codes: 0 when the run succeeds and every `--expect` matches, 1 when
//! an expectation fails, 2 on invalid input or a numerical error.

mod commands;
mod config;
mod families;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "shocklab", version, about = "Generalized-function shock calculus, jump conditions and two-scale experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every command.
#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// TOML file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory (default: shocklab-out/<command>).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Expected verdict; repeatable, each must match every reported verdict.
    #[arg(long)]
    pub expect: Vec<String>,
    /// Seed for anything drawn at random.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Order, association and product-defect tests on ε-families.
    Asymptotics(commands::AsymptoticsArgs),
    /// Jump conditions for a system with strong (=) and weak (~) statements.
    Jump(commands::JumpArgs),
    /// Two-scale / two-viscosity finite-difference runs.
    Simulate(commands::SimulateArgs),
    /// Worked cases: kk, isothermal, elastoplastic, heaviside-powers.
    Case(commands::CaseArgs),
}

/// Verdicts reported by a command, checked against `--expect`.
pub struct Outcome {
    pub out: PathBuf,
    pub verdicts: Vec<String>,
}

fn run(cli: Cli) -> Result<(Outcome, Vec<String>)> {
    match cli.command {
        Command::Asymptotics(a) => commands::asymptotics(a),
        Command::Jump(a) => commands::jump(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Case(a) => commands::case(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Ok((outcome, expect)) => {
            println!("output: {}", outcome.out.display());
            println!("verdict: {}", outcome.verdicts.join(", "));
            let failed: Vec<&String> = expect.iter().filter(|e| outcome.verdicts.iter().any(|v| v != *e)).collect();
            if failed.is_empty() {
                ExitCode::SUCCESS
            } else {
                for e in failed {
                    eprintln!("expectation failed: wanted {e}, got {}", outcome.verdicts.join(", "));
                }
                ExitCode::from(1)
            }
        }
    }
}
