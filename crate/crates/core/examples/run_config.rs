//! Parses a configuration and runs the `simulate` and `compare`
//! subcommands into a scratch directory.

use std::path::Path;

use obstacle_rd::config::ExperimentConfig;
use obstacle_rd::runner::{run, Subcommand};
use obstacle_rd::verify::summary_table;

const CONFIG: &str = "\
domain.nodes = 128
convex.type = simplex
components = 2
lambda = 1
epsilon_list = 0.1,0.01
t_final = 1
sample_every = 1
pairs = 4
";

fn main() -> obstacle_rd::Result<()> {
    let config = ExperimentConfig::parse(CONFIG, Path::new("inline"))?;
    print!("canonical form:\n{}", config.serialize());
    let out = std::env::temp_dir().join("obstacle-rd-example");
    for sub in [Subcommand::Simulate, Subcommand::Compare] {
        let outcome = run(&config, sub, &out)?;
        println!("{sub}: {}", outcome.dir.display());
        if !outcome.reports.is_empty() {
            print!("{}", summary_table(&outcome.reports));
        }
    }
    Ok(())
}
