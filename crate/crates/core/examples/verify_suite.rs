//! Runs suite criteria by name on the acceptance profile, e.g.
//! `cargo run --release --example verify_suite -- contraction energy`.
//! With no arguments every criterion runs.

use obstacle_rd::suite::{run_suite, Criterion, Profile};
use obstacle_rd::verify::summary_table;

fn main() -> obstacle_rd::Result<()> {
    let names: Vec<String> = std::env::args().skip(1).collect();
    let criteria: Vec<Criterion> = if names.is_empty() {
        Criterion::ALL.to_vec()
    } else {
        names.iter().map(|n| n.parse().unwrap_or_else(|e: String| panic!("{e}"))).collect()
    };
    let reports = run_suite(&Profile::acceptance(2024), &criteria)?;
    print!("{}", summary_table(&reports));
    for r in reports.iter().filter(|r| !r.note.is_empty()) {
        println!("{}: {}", r.check, r.note);
    }
    Ok(())
}
