//! Solve one problem with the default data and print the stored history. Optional
//! arguments: ε (default 0.1) and a TOML configuration.

use std::time::Instant;

use dynbc::config::RunConfig;
use dynbc::solver::{continue_global, prepare};

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
    let start = Instant::now();
    let spec = cfg.problem_for(eps)?;
    let run = continue_global(&prepare(&spec)?, spec.horizon, &cfg.solver_config())?;
    println!("ε = {eps}, horizon {}, first interval {:?}", run.horizon, run.t_star());
    for (k, iv) in run.intervals.iter().enumerate() {
        println!(
            "interval {k}: [{:.4}, {:.4}] iterations {} residual {:.2e}",
            iv.t_start,
            iv.t_start + iv.t_len,
            iv.iterations,
            iv.xt_residual
        );
    }
    println!("\n{:>10} {:>12} {:>12} {:>12}", "t", "‖u‖", "‖v‖", "‖w‖");
    for s in &run.snapshots {
        println!("{:>10.4e} {:>12.6} {:>12.6} {:>12.6}", s.t, s.u.sup(), s.v.sup(), s.w.sup());
    }
    if let Some(f) = &run.failure {
        println!("stopped early: {f}");
    }
    println!("({:.1} s)", start.elapsed().as_secs_f64());
    Ok(())
}
