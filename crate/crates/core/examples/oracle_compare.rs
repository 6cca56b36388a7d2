//! Compare the mild solution with the finite-difference oracle at two resolutions.
//! Optional arguments: ε (default 0.1) and a TOML configuration.

use dynbc::config::RunConfig;
use dynbc::harness::oracle_compare;

fn main() -> dynbc::Result<()> {
    env_logger::init();
    let mut args = std::env::args().skip(1);
    let eps: f64 = match args.next() {
        Some(s) => s.parse().map_err(|_| dynbc::Error::Config(format!("bad ε: {s}")))?,
        None => 0.1,
    };
    let cfg = match args.next() {
        Some(path) => RunConfig::from_toml(&std::fs::read_to_string(path)?)?,
        None => RunConfig::default(),
    };
    let report = oracle_compare(&cfg, eps)?;
    print!("{}", report.to_text());
    println!("finest gap {:.3e}, decreasing {}", report.finest_gap(), report.decreasing());
    Ok(())
}
