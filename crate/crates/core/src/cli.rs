//! Command dispatch for the `dynbc` binary: `solve`, `verify`, `sweep`, `oracle-compare`.

use std::ffi::OsString;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{DataName, RunConfig};
use crate::error::{Error, Result};
use crate::grid::write_csv;
use crate::harness::{oracle_compare, run_lemma_suite, run_sweep, SweepPlan};
use crate::solver::{continue_global, prepare};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;
pub const EXIT_FIT: i32 = 5;

/// Largest accepted finite-difference vs mild gap in `oracle-compare`.
pub const ORACLE_GAP_LIMIT: f64 = 5e-2;

#[derive(Debug, Parser)]
#[command(name = "dynbc", version, about = "Half-space heat equation with a dynamical boundary condition")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one problem and persist the stored history
    Solve,
    /// Run the lemma suite
    Verify,
    /// Run the ε-sweep and fit rates
    Sweep,
    /// Compare the mild solution with the finite-difference oracle
    OracleCompare,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Verify => "verify",
            Command::Sweep => "sweep",
            Command::OracleCompare => "oracle-compare",
        }
    }
}

#[derive(Debug, Args, Default)]
pub struct Overrides {
    /// TOML configuration file
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// ε for single runs; a comma-separated list replaces the sweep
    #[arg(long, global = true, value_delimiter = ',')]
    pub eps: Option<Vec<f64>>,
    #[arg(long, global = true)]
    pub horizon: Option<f64>,
    /// output directory (takes precedence over DYNBC_OUT and the config)
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// print the effective configuration and exit
    #[arg(long, global = true)]
    pub print_config: bool,
}

/// File, then `DYNBC_OUT`, then flags; validated.
pub fn effective_config(cmd: &Command, o: &Overrides, env_out: Option<PathBuf>) -> Result<RunConfig> {
    let mut cfg = match &o.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
        }
        None => RunConfig::default(),
    };
    if let Some(dir) = env_out {
        cfg.output.dir = dir;
    }
    if let Some(eps) = &o.eps {
        match (cmd, eps.as_slice()) {
            (Command::Sweep, list) => cfg.problem.sweep = list.to_vec(),
            (_, [e]) => cfg.problem.eps = *e,
            _ => return Err(Error::Config(format!("{} takes a single --eps value", cmd.name()))),
        }
    }
    if let Some(h) = o.horizon {
        cfg.problem.horizon = h;
    }
    if let Some(d) = &o.out {
        cfg.output.dir = d.clone();
    }
    if let Some(s) = o.seed {
        cfg.seed = s;
    }
    if let Some(t) = o.threads {
        cfg.threads = t;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => EXIT_PARSE,
        Error::Fit(_) => EXIT_FIT,
        _ => EXIT_SOLVER,
    }
}

/// Parse `args` (including the program name), run, and return the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_PARSE } else { EXIT_OK };
        }
    };
    let env_out = std::env::var_os("DYNBC_OUT").map(PathBuf::from);
    let cfg = match effective_config(&cli.command, &cli.overrides, env_out) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("dynbc: {e}");
            return EXIT_PARSE;
        }
    };
    if cli.overrides.print_config {
        print!("{}", cfg.to_toml());
        return EXIT_OK;
    }
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("dynbc: thread pool: {e}");
            return EXIT_SOLVER;
        }
    };
    match pool.install(|| dispatch(&cli.command, &cfg)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("dynbc: {e}");
            exit_code(&e)
        }
    }
}

fn manifest(cmd: &Command, cfg: &RunConfig) -> String {
    format!(
        "# dynbc manifest (loadable with --config)\n# command = {}\n# version = {}\n{}",
        cmd.name(),
        env!("CARGO_PKG_VERSION"),
        cfg.to_toml()
    )
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    fs::write(dir.join(name), text)?;
    Ok(())
}

/// Run a validated configuration; artifacts go to `cfg.output.dir`.
pub fn dispatch(cmd: &Command, cfg: &RunConfig) -> Result<i32> {
    let dir = &cfg.output.dir;
    fs::create_dir_all(dir)?;
    write(dir, "manifest.txt", &manifest(cmd, cfg))?;
    match cmd {
        Command::Solve => cmd_solve(cfg, dir),
        Command::Verify => {
            let report = run_lemma_suite(cfg);
            write(dir, "report.txt", &report.to_text())?;
            for e in &report.entries {
                println!(
                    "{:<4} {}.{}  observed {:.3e}  allowed {:.3e}",
                    if e.passed { "ok" } else { "FAIL" },
                    e.group,
                    e.name,
                    e.observed,
                    e.allowed
                );
            }
            Ok(if report.all_pass() { EXIT_OK } else { EXIT_VERIFY })
        }
        Command::Sweep => {
            let plan = SweepPlan::from_config(cfg)?;
            let report = run_sweep(&plan)?;
            write(dir, "report.txt", &report.to_text())?;
            for f in &report.functionals {
                if let Some(dat) = report.rates_dat(f.functional) {
                    write(dir, &format!("rates_{}.dat", f.functional.name()), &dat)?;
                }
                let slope = f.fit.map_or("-".to_string(), |x| format!("{:.4}", x.slope));
                println!("{:<12} slope {:>8}  {:?}", f.functional.name(), slope, f.status);
            }
            Ok(if report.insufficient() {
                EXIT_FIT
            } else if report.bands_pass() {
                EXIT_OK
            } else {
                EXIT_VERIFY
            })
        }
        Command::OracleCompare => {
            let report = oracle_compare(cfg, cfg.problem.eps)?;
            write(dir, "report.txt", &report.to_text())?;
            for (i, l) in report.levels.iter().enumerate() {
                println!("level {i}: n' = {}, dt = {:e}, gap {:.4e}", l.n_prime, l.dt, l.gap);
            }
            let ok = report.finest_gap() <= ORACLE_GAP_LIMIT && report.decreasing();
            Ok(if ok { EXIT_OK } else { EXIT_VERIFY })
        }
    }
}

fn cmd_solve(cfg: &RunConfig, dir: &Path) -> Result<i32> {
    let spec = cfg.problem_for(cfg.problem.eps)?;
    let run = continue_global(&prepare(&spec)?, spec.horizon, &cfg.solver_config())?;
    let constant = cfg.problem.phi == DataName::Constant && cfg.problem.phi_b == DataName::Constant;
    let mut report = String::from("# dynbc solve report\n");
    report += &format!("eps = {:.9e}\nhorizon = {:.9e}\nm = {:.9e}\n", run.eps, run.horizon, run.m);
    report += &format!("t_star = {}\n", run.t_star().map_or("none".into(), |t| format!("{t:.9e}")));
    report += &format!("intervals = {}\nreached = {:.9e}\n", run.intervals.len(), run.end_time());
    for (k, iv) in run.intervals.iter().enumerate() {
        report += &format!(
            "interval{k} = start {:.9e} length {:.9e} iterations {} halvings {} xt_residual {:.9e}\n",
            iv.t_start, iv.t_len, iv.iterations, iv.halvings, iv.xt_residual
        );
    }
    println!("{:>14} {:>14} {:>14} {:>14}", "t", "|u|", "|v|", "|w|");
    let mut dev = 0.0f64;
    for (idx, s) in run.snapshots.iter().enumerate() {
        println!("{:>14.6e} {:>14.6e} {:>14.6e} {:>14.6e}", s.t, s.u.sup(), s.v.sup(), s.w.sup());
        report += &format!(
            "snapshot{idx:02} = t {:.9e} u {:.9e} v {:.9e} w {:.9e}\n",
            s.t,
            s.u.sup(),
            s.v.sup(),
            s.w.sup()
        );
        dev = s.u.values.iter().fold(dev, |m, v| m.max((v - cfg.problem.constant).abs()));
        for name in &cfg.output.fields {
            let f = match name.as_str() {
                "u" => &s.u,
                "v" => &s.v,
                _ => &s.w,
            };
            let file = fs::File::create(dir.join(format!("{name}_{idx:02}.csv")))?;
            write_csv(f, BufWriter::new(file))?;
        }
    }
    if constant {
        println!("max |u - {}| = {dev:.3e}", cfg.problem.constant);
        report += &format!("max_dev_from_constant = {dev:.9e}\n");
    }
    if let Some(f) = &run.failure {
        report += &format!("failure = {f}\n");
    }
    write(dir, "report.txt", &report)?;
    if let Some(f) = run.failure {
        eprintln!("dynbc: {f}");
        return Ok(EXIT_SOLVER);
    }
    Ok(EXIT_OK)
}
