use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use obstacle_rd::config::ExperimentConfig;
use obstacle_rd::runner::{exit_code, run, Subcommand};
use obstacle_rd::verify::summary_table;
use obstacle_rd::{Error, Result};

/// Reaction-diffusion systems with a convex obstacle: simulation and
/// estimate checks.
#[derive(Parser)]
#[command(name = "obstacle-rd", version)]
struct Cli {
    /// simulate | compare | sweep | verify | dimension
    subcommand: Subcommand,
    /// Experiment configuration (`key = value` lines).
    #[arg(long)]
    config: PathBuf,
    /// Worker threads; all cores by default.
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory; overrides `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `seed`.
    #[arg(long)]
    seed: Option<u64>,
}

fn execute(cli: &Cli) -> Result<obstacle_rd::runner::Outcome> {
    let mut config = ExperimentConfig::load(&cli.config)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let out = cli.out.clone().unwrap_or_else(|| config.output_dir.clone());
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(Error::config("workers", "need at least one worker"));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| Error::RunFailed(e.to_string()))?;
    pool.install(|| run(&config, cli.subcommand, &out))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = execute(&cli);
    match &result {
        Ok(outcome) => {
            if !outcome.reports.is_empty() {
                print!("{}", summary_table(&outcome.reports));
            }
            println!("results in {}", outcome.dir.display());
        }
        Err(e) => eprintln!("error: {e}"),
    }
    ExitCode::from(exit_code(&result) as u8)
}
