//! Runs an experiment file the way the `robust-hedge` binary does:
//! `cargo run --example run_experiment -- configs/hedge_call.toml [out_dir]`.

use std::path::PathBuf;

use robust_hedge::config::ExperimentConfig;
use robust_hedge::runner::{run, Command, RunOptions};

fn main() {
    let mut args = std::env::args().skip(1);
    let path = PathBuf::from(args.next().unwrap_or_else(|| "configs/hedge_call.toml".into()));
    let out = args.next().map(PathBuf::from);
    let loaded = match ExperimentConfig::load(&path) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(e.exit_code());
        }
    };
    println!("{} (sha256 {})", path.display(), &loaded.sha256[..12]);
    let commands: &[Command] = if loaded.config.sweep.is_some() {
        &[Command::Sweep, Command::Report]
    } else {
        &[Command::Simulate, Command::Hedge]
    };
    let opts = RunOptions { seed: None, out };
    for &cmd in commands {
        match run(cmd, &loaded, &opts) {
            Ok(o) => {
                println!("{}: {}", cmd.name(), o.summary);
                for f in o.files {
                    println!("  wrote {}", f.display());
                }
            }
            Err(e) => {
                eprintln!("{}: {e}", cmd.name());
                std::process::exit(e.exit_code());
            }
        }
    }
}
