use std::fmt::Write as _;
use std::sync::Arc;

use log::info;

use super::sci;
use crate::config::{grid_from, problem_on, GridConfig, RunConfig};
use crate::error::{Error, Result};
use crate::grid::{Field, HalfSpaceGrid};
use crate::kernels::Dim;
use crate::oracle::{fd_solve, FDConfig};
use crate::solver::{continue_global, prepare};

/// One resolution of the comparison.
#[derive(Debug, Clone)]
pub struct CompareLevel {
    pub n_prime: usize,
    pub core_cells: usize,
    pub fd_depth_nodes: usize,
    pub dt: f64,
    pub duhamel_nodes: usize,
    /// `(t, max over K of |u_fd - u_mild|)` at the stored times inside the window
    pub gaps: Vec<(f64, f64)>,
    pub gap: f64,
}

#[derive(Debug, Clone)]
pub struct CompareReport {
    pub eps: f64,
    /// coarse first when refinement is on
    pub levels: Vec<CompareLevel>,
}

impl CompareReport {
    pub fn finest_gap(&self) -> f64 {
        self.levels.last().map_or(f64::NAN, |l| l.gap)
    }

    /// Gap shrinks under the joint refinement (trivially true with one level).
    pub fn decreasing(&self) -> bool {
        self.levels.windows(2).all(|w| w[1].gap < w[0].gap)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# dynbc oracle comparison");
        let _ = writeln!(s, "eps = {}", sci(self.eps));
        for (i, l) in self.levels.iter().enumerate() {
            let _ = writeln!(s, "\n[level {i}]");
            let _ = writeln!(s, "n_prime = {}", l.n_prime);
            let _ = writeln!(s, "core_cells = {}", l.core_cells);
            let _ = writeln!(s, "fd_depth_nodes = {}", l.fd_depth_nodes);
            let _ = writeln!(s, "dt = {}", sci(l.dt));
            let _ = writeln!(s, "duhamel_nodes = {}", l.duhamel_nodes);
            for (t, g) in &l.gaps {
                let _ = writeln!(s, "gap_t{} = {}", sci(*t), sci(*g));
            }
            let _ = writeln!(s, "gap = {}", sci(l.gap));
        }
        let _ = writeln!(s, "\ndecreasing = {}", self.decreasing());
        s
    }
}

fn run_level(cfg: &RunConfig, grid: &GridConfig, dt: f64, nodes: usize, eps: f64) -> Result<CompareLevel> {
    let horizon = cfg.problem.horizon;
    let mild_grid = grid_from(grid, eps, horizon)?;
    let hd = grid.core_depth / grid.core_cells as f64;
    let cells = (mild_grid.depth().last().copied().unwrap_or(0.0) / hd).ceil() as usize;
    let fd_grid = Arc::new(HalfSpaceGrid::uniform(
        Dim::new(2)?,
        grid.r_prime,
        cells as f64 * hd,
        grid.n_prime,
        cells + 1,
    )?);
    let mut scfg = cfg.solver_config();
    scfg.time_nodes = nodes;
    let spec = problem_on(&cfg.problem, mild_grid.clone(), eps)?;
    let run = continue_global(&prepare(&spec)?, horizon, &scfg)?;
    if let Some(f) = &run.failure {
        return Err(Error::Solver {
            reason: f.clone(),
            t_start: run.end_time(),
            t_len: 0.0,
        });
    }
    let [t1, t2] = cfg.harness.window;
    let tol = 1e-12 * t2;
    let snaps: Vec<_> = run.snapshots.iter().filter(|s| s.t >= t1 - tol && s.t <= t2 + tol).collect();
    if snaps.is_empty() {
        return Err(Error::Config(format!("no stored time inside the window [{t1}, {t2}]")));
    }
    let times: Vec<f64> = snaps.iter().map(|s| s.t).collect();
    let fd_spec = problem_on(&cfg.problem, fd_grid.clone(), eps)?;
    let fd = fd_solve(&fd_spec.phi, &fd_spec.phi_b, eps, &FDConfig::new(fd_grid.clone(), dt)?, &times)?;
    let h = &cfg.harness;
    // K sits in the uniform core, where both grids share their nodes
    let mut pairs = Vec::new();
    for (k, &y) in mild_grid.depth().iter().enumerate() {
        if y > h.k_depth * (1.0 + 1e-12) {
            continue;
        }
        let kf = (y / hd).round() as usize;
        if (fd_grid.depth()[kf] - y).abs() > 1e-9 {
            return Err(Error::Config("the compact set K must lie inside the uniform depth core".into()));
        }
        for (i, &x) in mild_grid.lateral().iter().enumerate() {
            if x.abs() <= h.k_lateral * (1.0 + 1e-12) {
                pairs.push((mild_grid.index(i, k), fd_grid.index(i, kf)));
            }
        }
    }
    let gap_of = |a: &Field, b: &Field| pairs.iter().map(|&(p, q)| (a.values[p] - b.values[q]).abs()).fold(0.0, f64::max);
    let gaps: Vec<(f64, f64)> = snaps.iter().zip(&fd).map(|(s, (t, u))| (*t, gap_of(&s.u, u))).collect();
    let gap = gaps.iter().map(|p| p.1).fold(0.0, f64::max);
    info!("oracle-compare: n' = {}, dt = {dt:e}: gap {gap:e}", grid.n_prime);
    Ok(CompareLevel {
        n_prime: grid.n_prime,
        core_cells: grid.core_cells,
        fd_depth_nodes: cells + 1,
        dt,
        duhamel_nodes: nodes,
        gaps,
        gap,
    })
}

/// Gap between the finite-difference solution and the mild solution on the window and `K`,
/// at the configured resolution and (optionally) one level coarser in every parameter.
pub fn oracle_compare(cfg: &RunConfig, eps: f64) -> Result<CompareReport> {
    cfg.validate()?;
    let fine = (cfg.grid.clone(), cfg.oracle.dt, cfg.quadrature.duhamel_nodes);
    let mut plan = Vec::new();
    if cfg.oracle.refine {
        plan.push((cfg.grid.coarsened(), 2.0 * fine.1, (fine.2 / 2).max(2)));
    }
    plan.push(fine);
    let levels = plan
        .iter()
        .map(|(g, dt, n)| run_level(cfg, g, *dt, *n, eps))
        .collect::<Result<Vec<_>>>()?;
    Ok(CompareReport { eps, levels })
}
