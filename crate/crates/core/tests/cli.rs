use std::fs;
use std::path::{Path, PathBuf};

use dynbc::cli::{effective_config, run, Command, Overrides, EXIT_FIT, EXIT_OK, EXIT_PARSE, EXIT_VERIFY};
use dynbc::config::RunConfig;
use dynbc::grid::read_csv;

const SMALL: &str = "
[problem]
horizon = 0.25

[grid]
r_prime = 4.0
n_prime = 33
n_depth = 33

[quadrature]
duhamel_nodes = 32
octaves = 12

[harness]
window = [0.1, 0.25]
";

fn write_config(dir: &Path) -> PathBuf {
    let p = dir.join("run.toml");
    fs::write(&p, SMALL).unwrap();
    p
}

fn dynbc(args: &[&str]) -> i32 {
    run(std::iter::once("dynbc").chain(args.iter().copied()))
}

#[test]
fn print_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    assert_eq!(dynbc(&["solve", "--config", cfg.to_str().unwrap(), "--print-config"]), EXIT_OK);
    // nothing is run or written
    assert!(!dir.path().join("dynbc_out").exists());
    let o = Overrides {
        config: Some(cfg),
        eps: Some(vec![0.05]),
        seed: Some(9),
        ..Overrides::default()
    };
    let eff = effective_config(&Command::Solve, &o, None).unwrap();
    assert_eq!(eff.problem.eps, 0.05);
    assert_eq!(eff.seed, 9);
    assert_eq!(RunConfig::from_toml(&eff.to_toml()).unwrap(), eff);
}

#[test]
fn output_directory_precedence() {
    let o = Overrides::default();
    let env = Some(PathBuf::from("from_env"));
    assert_eq!(effective_config(&Command::Solve, &o, env.clone()).unwrap().output.dir, PathBuf::from("from_env"));
    let o = Overrides {
        out: Some("from_flag".into()),
        ..Overrides::default()
    };
    assert_eq!(effective_config(&Command::Solve, &o, env).unwrap().output.dir, PathBuf::from("from_flag"));
}

#[test]
fn malformed_config_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "[grid]\nn_prime = \"many\"\n").unwrap();
    for cmd in ["solve", "verify", "sweep", "oracle-compare"] {
        assert_eq!(dynbc(&[cmd, "--config", bad.to_str().unwrap(), "--out", out.to_str().unwrap()]), EXIT_PARSE);
    }
    fs::write(&bad, "[solver]\npicard_tolerance = 1e-7\n").unwrap();
    assert_eq!(dynbc(&["solve", "--config", bad.to_str().unwrap(), "--out", out.to_str().unwrap()]), EXIT_PARSE);
    assert_eq!(dynbc(&["solve", "--eps", "0.1,0.01", "--out", out.to_str().unwrap()]), EXIT_PARSE);
    assert_eq!(dynbc(&["solve", "--eps", "2", "--out", out.to_str().unwrap()]), EXIT_PARSE);
    assert_eq!(dynbc(&["frobnicate"]), EXIT_PARSE);
    assert!(!out.exists());
}

#[test]
fn zero_data_solve_persists_zero_fields() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let text = fs::read_to_string(&cfg).unwrap().replace("horizon = 0.25", "horizon = 0.25\nphi = \"zero\"\nphi_b = \"zero\"");
    fs::write(&cfg, text).unwrap();
    let out = dir.path().join("zero");
    assert_eq!(dynbc(&["solve", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]), EXIT_OK);
    let csv: Vec<_> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    assert!(!csv.is_empty());
    for p in csv {
        let f = read_csv(std::io::BufReader::new(fs::File::open(p).unwrap())).unwrap();
        assert!(f.values.iter().all(|&v| v == 0.0));
    }
    // the manifest reproduces the effective configuration
    let manifest = fs::read_to_string(out.join("manifest.txt")).unwrap();
    let back = RunConfig::from_toml(&manifest).unwrap();
    assert_eq!(back.output.dir, out);
    assert_eq!(back.grid.n_prime, 33);
}

#[test]
fn constant_data_solve_reports_deviation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let text = fs::read_to_string(&cfg).unwrap().replace("horizon = 0.25", "horizon = 0.25\nphi = \"constant\"\nphi_b = \"constant\"");
    fs::write(&cfg, text).unwrap();
    let out = dir.path().join("one");
    assert_eq!(dynbc(&["solve", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]), EXIT_OK);
    let report = fs::read_to_string(out.join("report.txt")).unwrap();
    let dev: f64 = report
        .lines()
        .find_map(|l| l.strip_prefix("max_dev_from_constant = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(dev < 1e-10);
}

#[test]
fn single_eps_sweep_is_a_fit_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let out = dir.path().join("sweep");
    assert_eq!(dynbc(&["sweep", "--config", cfg.to_str().unwrap(), "--eps", "0.1", "--out", out.to_str().unwrap()]), EXIT_FIT);
    assert!(out.join("report.txt").exists());
}

#[test]
fn compatible_sweep_is_below_floor() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let text = fs::read_to_string(&cfg).unwrap().replace("horizon = 0.25", "horizon = 0.25\nphi = \"constant\"\nphi_b = \"constant\"");
    fs::write(&cfg, text).unwrap();
    let out = dir.path().join("sweep");
    let args = ["sweep", "--config", cfg.to_str().unwrap(), "--eps", "0.1,0.01,0.001", "--out", out.to_str().unwrap()];
    assert_eq!(dynbc(&args), EXIT_OK);
    let report = fs::read_to_string(out.join("report.txt")).unwrap();
    assert_eq!(report.matches("status = below_floor").count(), 5, "{report}");
}

#[test]
fn coarse_grid_verify_flags_failures() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("coarse.toml");
    fs::write(&cfg, "[grid]\nn_prime = 5\n\n[harness]\ninstances = 10\ncontraction_pairs = 2\n").unwrap();
    let out = dir.path().join("verify");
    assert_eq!(dynbc(&["verify", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]), EXIT_VERIFY);
    let report = fs::read_to_string(out.join("report.txt")).unwrap();
    assert!(report.contains("status = fail"));
}
