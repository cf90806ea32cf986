use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use robust_hedge::config::ExperimentConfig;
use robust_hedge::runner::{run, Command, RunOptions};

#[derive(Parser)]
#[command(version, about = "Quadratic hedging experiments with truncated small jumps")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate paths and write a binary dump plus price moments.
    Simulate(Args),
    /// Solve the hedging equations and write node-wise hedge statistics.
    Hedge(Args),
    /// Run the truncation sweep; exits 4 when a check fails.
    Sweep(Args),
    /// Recheck a finished sweep from its CSV and JSON-lines files.
    Report(Args),
}

#[derive(clap::Args)]
struct Args {
    /// Experiment file (TOML).
    config: PathBuf,
    /// Override the seed from the file.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output directory from the file.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Cmd::Simulate(a) => (Command::Simulate, a),
        Cmd::Hedge(a) => (Command::Hedge, a),
        Cmd::Sweep(a) => (Command::Sweep, a),
        Cmd::Report(a) => (Command::Report, a),
    };
    let opts = RunOptions {
        seed: args.seed,
        out: args.out,
    };
    let result = ExperimentConfig::load(&args.config).and_then(|cfg| run(command, &cfg, &opts));
    match result {
        Ok(outcome) => {
            println!("{}", outcome.summary.trim_end());
            for f in outcome.files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
