mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::ExperimentConfig;
use error::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "levy-she", version, about = "Stochastic heat equation experiments with small-jump Levy noise")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Flat `key = value` configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output.dir`)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Base seed (overrides `seed`)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (overrides `workers`)
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// AR statistic over the epsilon and kappa grids
    ArScan,
    /// Simulate paths and export coefficients and atom files
    Simulate,
    /// Levy versus Gaussian comparison report
    Compare,
    /// Numerical identity checks
    Identities,
}

fn execute(cli: &Cli) -> CliResult<Vec<PathBuf>> {
    let text = commands::read_config(cli.config.as_deref())?;
    let mut overrides = Vec::new();
    if let Some(s) = cli.seed {
        overrides.push(("seed", s.to_string()));
    }
    if let Some(o) = &cli.out {
        overrides.push(("output.dir", o.display().to_string()));
    }
    if let Some(w) = cli.workers {
        overrides.push(("workers", w.to_string()));
    }
    let cfg = ExperimentConfig::from_document(&text, &overrides)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| CliError::Config(format!("worker pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::ArScan => commands::ar_scan_cmd(&cfg),
        Command::Simulate => commands::simulate_cmd(&cfg),
        Command::Compare => commands::compare_cmd(&cfg),
        Command::Identities => commands::identities_cmd(&cfg),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
