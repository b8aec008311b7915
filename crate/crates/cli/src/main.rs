use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ssls::{compare_methods, run_experiment, ExperimentConfig, Result};

#[derive(Parser)]
#[command(version, about = "Sequential data assimilation with score-based Langevin sampling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one method and write trajectory, metrics and summary CSVs.
    Run(Target),
    /// Run several methods on the same reference run and join their metrics.
    Compare(Target),
}

#[derive(Args)]
struct Target {
    /// TOML experiment configuration.
    config: PathBuf,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load(target: &Target) -> Result<(ExperimentConfig, PathBuf)> {
    let mut config = ExperimentConfig::load(&target.config)?;
    if let Some(seed) = target.seed {
        config.seed = seed;
    }
    let out = target.out.clone().unwrap_or_else(|| config.output_dir());
    Ok((config, out))
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(t) => {
            let (config, out) = load(&t)?;
            let result = run_experiment(&config, &out)?;
            println!("{}: {} steps written to {}", result.method, result.records.len(), out.display());
        }
        Command::Compare(t) => {
            let (config, out) = load(&t)?;
            let results = compare_methods(&config, &out)?;
            let names: Vec<&str> = results.iter().map(|r| r.method.name()).collect();
            println!("{} compared, written to {}", names.join(", "), out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
