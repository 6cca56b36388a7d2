//! Run configuration (TOML) and the built-in data library.

use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{BoundaryField, Field, HalfSpaceGrid};
use crate::kernels::Dim;
use crate::semigroups::S2Op;
use crate::solver::{ProblemSpec, SolverConfig};

/// Named closed-form data. As interior data `x` is `(x', x_N)`, as boundary data `x = x'`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataName {
    /// `exp(-|x|²)`
    GaussianBump,
    /// `1 / (1 + |x|²)`
    CauchyBoundary,
    /// the configured constant
    Constant,
    Zero,
    /// interior data only: `S₂(0) φ_b`, compatible with the boundary data
    Compatible,
}

impl DataName {
    fn eval(self, c: f64, r2: f64) -> f64 {
        match self {
            DataName::GaussianBump => (-r2).exp(),
            DataName::CauchyBoundary => 1.0 / (1.0 + r2),
            DataName::Constant => c,
            DataName::Zero | DataName::Compatible => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProblemConfig {
    pub dim: usize,
    pub phi: DataName,
    pub phi_b: DataName,
    pub constant: f64,
    /// single-run ε (`solve`, `verify`, `oracle-compare`)
    pub eps: f64,
    /// ε-sweep list, strictly decreasing
    pub sweep: Vec<f64>,
    pub horizon: f64,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        ProblemConfig {
            dim: 2,
            phi: DataName::GaussianBump,
            phi_b: DataName::CauchyBoundary,
            constant: 1.0,
            eps: 0.1,
            sweep: vec![1e-1, 3e-2, 1e-2, 3e-3, 1e-3],
            horizon: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub r_prime: f64,
    pub n_prime: usize,
    pub n_depth: usize,
    /// fixed depth `L`; otherwise `max(l_min, l_factor √(horizon/ε))`
    pub depth: Option<f64>,
    pub l_min: f64,
    pub l_factor: f64,
    /// uniform cells on `[0, core_depth]` before geometric stretching
    pub core_depth: f64,
    pub core_cells: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            r_prime: 8.0,
            n_prime: 129,
            n_depth: 65,
            depth: None,
            l_min: 4.0,
            l_factor: 6.0,
            core_depth: 1.0,
            core_cells: 16,
        }
    }
}

impl GridConfig {
    /// Same box, half the resolution.
    pub fn coarsened(&self) -> GridConfig {
        GridConfig {
            n_prime: self.n_prime / 2 + 1,
            n_depth: self.n_depth / 2 + 1,
            core_cells: (self.core_cells / 2).max(1),
            ..self.clone()
        }
    }

    pub fn depth_for(&self, eps: f64, horizon: f64) -> f64 {
        self.depth.unwrap_or_else(|| self.l_min.max(self.l_factor * (horizon / eps).sqrt()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureConfig {
    /// target accuracy of a single quadrature; sets the reporting floor
    pub tol: f64,
    pub duhamel_nodes: usize,
    pub trace_per_octave: usize,
    pub octaves: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            tol: 1e-6,
            duhamel_nodes: 64,
            trace_per_octave: 2,
            octaves: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub picard_tol: f64,
    pub max_iter: usize,
    pub t_min: f64,
    pub ratio_threshold: f64,
    pub interval_guess: Option<f64>,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverConfig::default();
        SolverSection {
            picard_tol: d.picard_tol,
            max_iter: d.max_iter,
            t_min: d.t_min,
            ratio_threshold: d.ratio_threshold,
            interval_guess: d.interval_guess,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HarnessConfig {
    pub functionals: Vec<String>,
    /// Corollary window `(τ₁, τ₂)`
    pub window: [f64; 2],
    /// compact set `{|x'| ≤ k_lateral, x_N ≤ k_depth}`
    pub k_lateral: f64,
    pub k_depth: f64,
    pub strip: f64,
    pub t_small: f64,
    /// random instances per inequality in `verify`
    pub instances: usize,
    pub contraction_pairs: usize,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        HarnessConfig {
            functionals: ["thm_b_strip", "thm_c_wgap", "cor_u_gap", "lem24_dxn", "d_eps_norm"]
                .map(String::from)
                .to_vec(),
            window: [0.1, 0.5],
            k_lateral: 1.0,
            k_depth: 1.0,
            strip: 1.0,
            t_small: 0.05,
            instances: 100,
            contraction_pairs: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleConfig {
    pub dt: f64,
    /// also run one level coarser (half resolution, double dt, half nodes)
    pub refine: bool,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { dt: 1e-3, refine: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// subset of `u`, `v`, `w` written as CSV at every stored time
    pub fields: Vec<String>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("dynbc_out"),
            fields: vec!["u".into()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    /// worker threads; 0 leaves the choice to the thread pool
    pub threads: usize,
    pub problem: ProblemConfig,
    pub grid: GridConfig,
    pub quadrature: QuadratureConfig,
    pub solver: SolverSection,
    pub harness: HarnessConfig,
    pub oracle: OracleConfig,
    pub output: OutputConfig,
}

const FUNCTIONALS: [&str; 5] = ["thm_b_strip", "thm_c_wgap", "cor_u_gap", "lem24_dxn", "d_eps_norm"];

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        let p = &self.problem;
        if p.dim != 2 {
            return bad(format!("problem.dim = {}: field numerics are implemented for N = 2", p.dim));
        }
        if p.phi_b == DataName::Compatible {
            return bad("problem.phi_b cannot be \"compatible\"".into());
        }
        if !(p.eps > 0.0 && p.eps < 1.0) || p.sweep.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
            return bad("eps values must lie in (0, 1)".into());
        }
        if p.sweep.windows(2).any(|w| w[1] >= w[0]) {
            return bad("problem.sweep must be strictly decreasing".into());
        }
        if !(p.horizon > 0.0) || !p.constant.is_finite() {
            return bad("problem.horizon must be positive and problem.constant finite".into());
        }
        let g = &self.grid;
        if g.n_prime < 3 || g.n_depth < 3 || g.core_cells == 0 || !(g.r_prime > 0.0) || !(g.core_depth > 0.0) {
            return bad("grid: need n_prime, n_depth >= 3, core_cells >= 1 and positive extents".into());
        }
        if g.depth.is_some_and(|l| !(l > 0.0)) {
            return bad("grid.depth must be positive".into());
        }
        let h = &self.harness;
        if let Some(f) = h.functionals.iter().find(|f| !FUNCTIONALS.contains(&f.as_str())) {
            return bad(format!("unknown functional {f:?}"));
        }
        if !(h.window[0] > 0.0 && h.window[0] < h.window[1] && h.window[1] <= p.horizon) {
            return bad("harness.window must satisfy 0 < τ₁ < τ₂ <= horizon".into());
        }
        if !(h.k_lateral > 0.0 && h.k_depth > 0.0 && h.strip > 0.0 && h.t_small > 0.0) {
            return bad("harness: K, strip and t_small must be positive".into());
        }
        if !(self.quadrature.tol > 0.0) || !(self.oracle.dt > 0.0) {
            return bad("quadrature.tol and oracle.dt must be positive".into());
        }
        if let Some(f) = self.output.fields.iter().find(|f| !["u", "v", "w"].contains(&f.as_str())) {
            return bad(format!("unknown output field {f:?}"));
        }
        self.solver_config().validate().map_err(|e| Error::Config(e.to_string()))
    }

    pub fn solver_config(&self) -> SolverConfig {
        let s = &self.solver;
        let q = &self.quadrature;
        SolverConfig {
            picard_tol: s.picard_tol,
            max_iter: s.max_iter,
            t_min: s.t_min,
            ratio_threshold: s.ratio_threshold,
            time_nodes: q.duhamel_nodes,
            trace_per_octave: q.trace_per_octave,
            octaves: q.octaves,
            interval_guess: s.interval_guess,
        }
    }

    pub fn grid_for(&self, eps: f64) -> Result<Arc<HalfSpaceGrid>> {
        grid_from(&self.grid, eps, self.problem.horizon)
    }

    pub fn problem_for(&self, eps: f64) -> Result<ProblemSpec> {
        problem_on(&self.problem, self.grid_for(eps)?, eps)
    }
}

pub fn grid_from(g: &GridConfig, eps: f64, horizon: f64) -> Result<Arc<HalfSpaceGrid>> {
    let l = g.depth_for(eps, horizon);
    let grid = HalfSpaceGrid::stretched(Dim::new(2)?, g.r_prime, l, g.n_prime, g.n_depth, g.core_depth, g.core_cells)?;
    Ok(Arc::new(grid))
}

/// Data of `p` sampled on `grid`.
pub fn problem_on(p: &ProblemConfig, grid: Arc<HalfSpaceGrid>, eps: f64) -> Result<ProblemSpec> {
    let c = p.constant;
    let phi_b = BoundaryField::from_fn(&grid, |x| p.phi_b.eval(c, x * x))?;
    let phi = match p.phi {
        DataName::Compatible => S2Op::new(&grid, 0.0)?.apply(&phi_b.values),
        name => Field::from_fn(&grid, |x, y| name.eval(c, x * x + y * y))?,
    };
    Ok(ProblemSpec {
        grid,
        phi,
        phi_b,
        eps,
        horizon: p.horizon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_defaults() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        let back = RunConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
        let partial = RunConfig::from_toml("[problem]\neps = 0.01\n").unwrap();
        assert_eq!(partial.problem.eps, 0.01);
        assert_eq!(partial.grid, GridConfig::default());
    }

    #[test]
    fn rejects_unknown_and_invalid() {
        assert!(RunConfig::from_toml("[problem]\nepsilon = 0.1\n").is_err());
        assert!(RunConfig::from_toml("bogus = 1\n").is_err());
        assert!(RunConfig::from_toml("[problem]\nsweep = [0.01, 0.1]\n").is_err());
        assert!(RunConfig::from_toml("[problem]\nphi = \"nope\"\n").is_err());
        assert!(RunConfig::from_toml("[harness]\nwindow = [0.4, 0.2]\n").is_err());
    }
}
