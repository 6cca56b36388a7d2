//! Run the lemma suite on the default configuration (or a TOML file given as the first
//! argument) and print the report.

use std::time::Instant;

use dynbc::config::RunConfig;
use dynbc::harness::run_lemma_suite;

fn main() -> dynbc::Result<()> {
    env_logger::init();
    let cfg = match std::env::args().nth(1) {
        Some(path) => RunConfig::from_toml(&std::fs::read_to_string(path)?)?,
        None => RunConfig::default(),
    };
    let start = Instant::now();
    let report = run_lemma_suite(&cfg);
    for e in &report.entries {
        println!(
            "{:<5} {:<14} {:<28} observed {:>12.4e}  allowed {:>10.3e}  {}",
            if e.passed { "ok" } else { "FAIL" },
            e.group,
            e.name,
            e.observed,
            e.allowed,
            e.detail
        );
    }
    println!("{} entries, all pass: {} ({:.1} s)", report.entries.len(), report.all_pass(), start.elapsed().as_secs_f64());
    Ok(())
}
