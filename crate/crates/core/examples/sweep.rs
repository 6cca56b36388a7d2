//! ε-sweep of the default problem: solve at every ε, evaluate the limit functionals and fit
//! their rates.

use std::time::Instant;

use dynbc::config::RunConfig;
use dynbc::harness::{run_sweep, SweepPlan};

fn main() -> dynbc::Result<()> {
    env_logger::init();
    let cfg = match std::env::args().nth(1) {
        Some(path) => RunConfig::from_toml(&std::fs::read_to_string(path)?)?,
        None => RunConfig::default(),
    };
    let start = Instant::now();
    let report = run_sweep(&SweepPlan::from_config(&cfg)?)?;
    print!("{}", report.to_text());
    println!("\nbands pass: {} ({:.1} s)", report.bands_pass(), start.elapsed().as_secs_f64());
    Ok(())
}
