use std::fmt::Write as _;

use log::{info, warn};
use rayon::prelude::*;

use super::{compact_gap, fit_rate, sci, Fit};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::grid::strip_sup_norm;
use crate::quadrature::LateralStencil;
use crate::semigroups::S2Op;
use crate::solver::{continue_global, prepare, ProblemSpec, SolverRun};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Functional {
    /// `sup_t t^{1/2} ‖v_ε(t)‖` over the strip `x_N ≤ L_strip`
    ThmBStrip,
    /// `sup_t |w_ε,b(t) - [S₂(t)φ_b]_{x_N=0}|`
    ThmCWgap,
    /// `sup |u_ε - S₂(t)φ_b|` over the window and `K`
    CorUGap,
    /// `sup_t t^{1/4} ‖∂_{x_N} D_ε[φ_b](t)‖`
    Lem24Dxn,
    /// `sup_{t ≤ t_small} ‖D_ε[φ_b](t)‖ / t^{1/4}`
    DEpsNorm,
}

impl Functional {
    pub const ALL: [Functional; 5] = [
        Functional::ThmBStrip,
        Functional::ThmCWgap,
        Functional::CorUGap,
        Functional::Lem24Dxn,
        Functional::DEpsNorm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Functional::ThmBStrip => "thm_b_strip",
            Functional::ThmCWgap => "thm_c_wgap",
            Functional::CorUGap => "cor_u_gap",
            Functional::Lem24Dxn => "lem24_dxn",
            Functional::DEpsNorm => "d_eps_norm",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == name)
    }

    /// Expected slope band; `None` for informational functionals.
    pub fn band(self) -> Option<(f64, f64)> {
        match self {
            Functional::ThmCWgap => Some((0.35, 0.65)),
            Functional::Lem24Dxn => Some((0.60, 0.90)),
            _ => None,
        }
    }
}

/// Largest RMS log-residual accepted for a banded fit.
pub const MAX_FIT_RESIDUAL: f64 = 0.1;
/// Allowed growth between consecutive sweep points in the trend check.
pub const TREND_SLACK: f64 = 0.1;

#[derive(Debug, Clone)]
pub struct SweepPlan {
    pub config: RunConfig,
    pub eps_values: Vec<f64>,
    pub functionals: Vec<Functional>,
}

impl SweepPlan {
    pub fn from_config(cfg: &RunConfig) -> Result<Self> {
        cfg.validate()?;
        let functionals = cfg
            .harness
            .functionals
            .iter()
            .map(|n| Functional::parse(n).ok_or_else(|| Error::Config(format!("unknown functional {n:?}"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(SweepPlan {
            config: cfg.clone(),
            eps_values: cfg.problem.sweep.clone(),
            functionals,
        })
    }
}

/// One ε of the sweep.
#[derive(Debug, Clone)]
pub struct PointResult {
    pub eps: f64,
    pub t_star: Option<f64>,
    pub iterations: Vec<usize>,
    pub xt_residual: f64,
    /// values below this are not distinguishable from quadrature error
    pub floor: f64,
    /// smallest sampled time entering `thm_b_strip`
    pub min_t: f64,
    /// aligned with the plan's functionals; `None` when missing
    pub values: Vec<Option<f64>>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FunctionalStatus {
    Pass,
    Fail,
    BelowFloor,
    Informational,
    Insufficient,
}

impl FunctionalStatus {
    fn label(self) -> &'static str {
        match self {
            FunctionalStatus::Pass => "pass",
            FunctionalStatus::Fail => "fail",
            FunctionalStatus::BelowFloor => "below_floor",
            FunctionalStatus::Informational => "informational",
            FunctionalStatus::Insufficient => "insufficient",
        }
    }
}

#[derive(Debug, Clone)]
pub struct FunctionalReport {
    pub functional: Functional,
    /// `(ε, value)` for every point with a value
    pub values: Vec<(f64, f64)>,
    /// points above the floor, the ones entering the fit
    pub used: Vec<(f64, f64)>,
    pub fit: Option<Fit>,
    /// consecutive values grow by at most the trend slack (points above the floor)
    pub monotone: bool,
    pub status: FunctionalStatus,
    pub note: String,
}

#[derive(Debug, Clone)]
pub struct RateReport {
    pub seed: u64,
    pub points: Vec<PointResult>,
    pub functionals: Vec<FunctionalReport>,
}

impl RateReport {
    pub fn get(&self, f: Functional) -> Option<&FunctionalReport> {
        self.functionals.iter().find(|r| r.functional == f)
    }

    pub fn insufficient(&self) -> bool {
        self.functionals.iter().any(|f| f.status == FunctionalStatus::Insufficient)
    }

    pub fn bands_pass(&self) -> bool {
        self.functionals
            .iter()
            .all(|f| !matches!(f.status, FunctionalStatus::Fail | FunctionalStatus::Insufficient))
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# dynbc sweep report");
        let _ = writeln!(s, "seed = {}", self.seed);
        let eps: Vec<String> = self.points.iter().map(|p| sci(p.eps)).collect();
        let _ = writeln!(s, "eps_values = {}", eps.join(" "));
        let names: Vec<&str> = self.functionals.iter().map(|f| f.functional.name()).collect();
        for p in &self.points {
            let _ = writeln!(s, "\n[point eps={}]", sci(p.eps));
            let _ = writeln!(s, "status = {}", if p.failure.is_some() { "failed" } else { "ok" });
            if let Some(f) = &p.failure {
                let _ = writeln!(s, "failure = {f}");
            }
            let _ = writeln!(s, "t_star = {}", p.t_star.map_or("none".into(), sci));
            let it: Vec<String> = p.iterations.iter().map(|i| i.to_string()).collect();
            let _ = writeln!(s, "iterations = {}", it.join(" "));
            let _ = writeln!(s, "xt_residual = {}", sci(p.xt_residual));
            let _ = writeln!(s, "floor = {}", sci(p.floor));
            let _ = writeln!(s, "min_sampled_t = {}", sci(p.min_t));
            for (n, v) in names.iter().zip(&p.values) {
                let _ = writeln!(s, "{n} = {}", v.map_or("missing".into(), sci));
            }
        }
        for f in &self.functionals {
            let _ = writeln!(s, "\n[functional {}]", f.functional.name());
            let _ = writeln!(s, "points = {}", f.values.len());
            let _ = writeln!(s, "fit_points = {}", f.used.len());
            if let Some(fit) = &f.fit {
                let _ = writeln!(s, "slope = {}", sci(fit.slope));
                let _ = writeln!(s, "intercept = {}", sci(fit.intercept));
                let _ = writeln!(s, "residual = {}", sci(fit.residual));
            }
            if let Some((lo, hi)) = f.functional.band() {
                let _ = writeln!(s, "band = {lo} {hi}");
            }
            let _ = writeln!(s, "monotone = {}", f.monotone);
            let _ = writeln!(s, "status = {}", f.status.label());
            if !f.note.is_empty() {
                let _ = writeln!(s, "note = {}", f.note);
            }
        }
        s
    }

    /// Two columns, `log₁₀ ε` and `log₁₀ value`, for the points entering the fit.
    pub fn rates_dat(&self, f: Functional) -> Option<String> {
        let r = self.get(f)?;
        let mut s = format!("# {} log10(eps) log10(value)\n", f.name());
        for (e, v) in &r.used {
            let _ = writeln!(s, "{} {}", sci(e.log10()), sci(v.log10()));
        }
        Some(s)
    }
}

// sup over the stored times and interval-0 quantities of a finished run
fn measure(run: &SolverRun, spec: &ProblemSpec, cfg: &RunConfig, f: Functional) -> Result<Option<f64>> {
    let h = &cfg.harness;
    let g = &spec.grid;
    let first: Vec<_> = run.snapshots.iter().filter(|s| s.interval == 0).collect();
    Ok(match f {
        Functional::ThmBStrip => {
            let mut m = 0.0f64;
            for s in &run.snapshots {
                m = m.max(s.t.sqrt() * strip_sup_norm(&s.v, h.strip)?);
            }
            Some(m)
        }
        Functional::ThmCWgap => {
            let mut m = 0.0f64;
            for (t, wb) in run.boundary_samples() {
                let limit = LateralStencil::poisson(t, g.lateral_spacing(), g.n_prime)?.apply(&spec.phi_b.values);
                m = wb.values.iter().zip(&limit).fold(m, |m, (a, b)| m.max((a - b).abs()));
            }
            Some(m)
        }
        Functional::CorUGap => {
            let [t1, t2] = h.window;
            let tol = 1e-12 * t2;
            let inside: Vec<_> = run.snapshots.iter().filter(|s| s.t >= t1 - tol && s.t <= t2 + tol).collect();
            if inside.is_empty() {
                warn!("cor_u_gap: no stored time in the window [{t1}, {t2}]");
                return Ok(None);
            }
            let mut m = 0.0f64;
            for s in inside {
                let limit = S2Op::new(g, s.t)?.apply(&spec.phi_b.values);
                m = m.max(compact_gap(&s.u, &limit, h.k_lateral, h.k_depth));
            }
            Some(m)
        }
        Functional::Lem24Dxn => first.iter().map(|s| s.t.powf(0.25) * s.d_eps_dxn_sup).reduce(f64::max),
        Functional::DEpsNorm => first
            .iter()
            .filter(|s| s.t <= h.t_small * (1.0 + 1e-12))
            .map(|s| s.d_eps_sup / s.t.powf(0.25))
            .reduce(f64::max),
    })
}

fn run_point(plan: &SweepPlan, eps: f64) -> Result<PointResult> {
    let cfg = &plan.config;
    let spec = cfg.problem_for(eps)?;
    let prob = prepare(&spec)?;
    let run = continue_global(&prob, spec.horizon, &cfg.solver_config())?;
    let xt_residual = run.intervals.iter().map(|iv| iv.xt_residual).fold(0.0, f64::max);
    let floor = 10.0 * (cfg.quadrature.tol * (spec.phi.sup() + spec.phi_b.sup()) + xt_residual);
    let values = if run.failure.is_some() {
        vec![None; plan.functionals.len()]
    } else {
        plan.functionals
            .iter()
            .map(|&f| measure(&run, &spec, cfg, f))
            .collect::<Result<Vec<_>>>()?
    };
    info!("sweep: eps = {eps:e} done, T* = {:?}", run.t_star());
    Ok(PointResult {
        eps,
        t_star: run.t_star(),
        iterations: run.iterations(),
        xt_residual,
        floor,
        min_t: run.snapshots.first().map_or(0.0, |s| s.t),
        values,
        failure: run.failure,
    })
}

fn assess(f: Functional, idx: usize, points: &[PointResult], enough_eps: bool) -> FunctionalReport {
    let values: Vec<(f64, f64)> = points.iter().filter_map(|p| p.values[idx].map(|v| (p.eps, v))).collect();
    let used: Vec<(f64, f64)> = points
        .iter()
        .filter_map(|p| p.values[idx].filter(|&v| v > p.floor).map(|v| (p.eps, v)))
        .collect();
    let monotone = used.windows(2).all(|w| w[1].1 <= w[0].1 * (1.0 + TREND_SLACK));
    let mut note = String::new();
    let (fit, status) = if !enough_eps {
        note = "fewer than 3 sweep points".into();
        (None, FunctionalStatus::Insufficient)
    } else if used.is_empty() && values.len() == points.len() {
        note = "every value is below the quadrature floor".into();
        (None, FunctionalStatus::BelowFloor)
    } else {
        match fit_rate(&used) {
            Err(e) => {
                note = e.to_string();
                (None, FunctionalStatus::Insufficient)
            }
            Ok(fit) => {
                if used.len() < values.len() {
                    note = format!("{} point(s) below the floor excluded", values.len() - used.len());
                }
                let status = match f.band() {
                    None => FunctionalStatus::Informational,
                    Some((lo, hi)) if fit.slope >= lo && fit.slope <= hi && fit.residual <= MAX_FIT_RESIDUAL => {
                        FunctionalStatus::Pass
                    }
                    Some(_) => FunctionalStatus::Fail,
                };
                (Some(fit), status)
            }
        }
    };
    FunctionalReport {
        functional: f,
        values,
        used,
        fit,
        monotone,
        status,
        note,
    }
}

/// Run every ε of the plan (concurrently), evaluate the functionals and fit their rates.
/// A solver failure at one ε only marks that point's values missing.
pub fn run_sweep(plan: &SweepPlan) -> Result<RateReport> {
    let points = plan
        .eps_values
        .par_iter()
        .map(|&eps| run_point(plan, eps))
        .collect::<Result<Vec<_>>>()?;
    let enough = plan.eps_values.len() >= 3;
    let functionals = plan
        .functionals
        .iter()
        .enumerate()
        .map(|(i, &f)| assess(f, i, &points, enough))
        .collect();
    Ok(RateReport {
        seed: plan.config.seed,
        points,
        functionals,
    })
}
