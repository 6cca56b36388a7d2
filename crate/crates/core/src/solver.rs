//! Fixed-point construction of `(v_ε, w_ε)`, continuation in time, and `u_ε = v_ε + w_ε`.
//!
//! `Q_ε[v]` depends on `v` only through its boundary trace `g = ∂_{x_N} v(·, 0, ·)`, so the
//! Picard iteration runs on trace histories and full fields are formed once the traces
//! have converged.

use std::sync::Arc;

use log::{debug, info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::duhamel_ops::{boundary_history, duhamel_fields, duhamel_rule, ForcingTable, TraceHistory};
use crate::error::{domain, Error, Result};
use crate::grid::{BoundaryField, Field, HalfSpaceGrid};
use crate::quadrature::{LateralStencil, TimeNode, TimeQuadRule};
use crate::semigroups::{S1BoundaryDxn, S1Op, S1Output, S2Op};

#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub grid: Arc<HalfSpaceGrid>,
    pub phi: Field,
    pub phi_b: BoundaryField,
    pub eps: f64,
    pub horizon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// stop when the X_T-type residual drops below `picard_tol · m`
    pub picard_tol: f64,
    pub max_iter: usize,
    pub t_min: f64,
    pub ratio_threshold: f64,
    pub time_nodes: usize,
    /// trace samples per octave of time; full fields are kept once per octave
    pub trace_per_octave: usize,
    /// octaves below the interval end (`J` in `T 2^{-j}`)
    pub octaves: usize,
    /// first trial interval; `min(1, horizon)` when absent
    pub interval_guess: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            picard_tol: 1e-7,
            max_iter: 50,
            t_min: 1e-6,
            ratio_threshold: 0.5,
            time_nodes: 64,
            trace_per_octave: 2,
            octaves: 20,
            interval_guess: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.picard_tol > 0.0) || self.max_iter == 0 || !(self.t_min > 0.0) {
            return domain("solver: picard_tol, max_iter and t_min must be positive");
        }
        if !(self.ratio_threshold > 0.0 && self.ratio_threshold < 1.0) {
            return domain("solver: ratio_threshold must lie in (0, 1)");
        }
        if self.interval_guess.is_some_and(|t| !(t > 0.0)) {
            return domain("solver: interval_guess must be positive");
        }
        if self.trace_per_octave == 0 || self.octaves == 0 {
            return domain("solver: trace_per_octave and octaves must be >= 1");
        }
        duhamel_rule(self.time_nodes).map(|_| ())
    }

    fn n_trace(&self) -> usize {
        self.trace_per_octave * self.octaves + 1
    }
}

/// Data in the form the fixed-point map uses.
#[derive(Debug, Clone)]
pub struct PreparedProblem {
    pub grid: Arc<HalfSpaceGrid>,
    pub phi_cap: Field,
    pub phi_b: BoundaryField,
    pub eps: f64,
    pub m: f64,
}

/// `Φ = φ - S₂(0) φ_b`, `m = 16 max(‖φ‖, |φ_b|)`.
pub fn prepare(spec: &ProblemSpec) -> Result<PreparedProblem> {
    if *spec.phi.grid != *spec.grid || *spec.phi_b.grid != *spec.grid {
        return domain("data and problem grids differ");
    }
    if spec.phi.values.iter().chain(&spec.phi_b.values).any(|v| !v.is_finite()) {
        return domain("initial data must be finite");
    }
    if !(spec.eps > 0.0 && spec.eps < 1.0) {
        return domain(format!("eps must lie in (0, 1), got {}", spec.eps));
    }
    if !(spec.horizon > 0.0) {
        return domain("horizon must be positive");
    }
    let s2 = S2Op::new(&spec.grid, 0.0)?;
    let phi_cap = spec.phi.sub(&s2.apply(&spec.phi_b.values));
    Ok(PreparedProblem {
        grid: spec.grid.clone(),
        phi_cap,
        phi_b: spec.phi_b.clone(),
        eps: spec.eps,
        m: 16.0 * spec.phi.sup().max(spec.phi_b.sup()),
    })
}

/// `sup_t [‖v(t)‖ + (ε⁻¹t)^{1/2} ‖∂_{x_N} v(t)‖]` over sampled times.
#[derive(Debug, Clone, PartialEq)]
pub struct XTNorm {
    pub t_end: f64,
    pub eps: f64,
    pub samples: Vec<f64>,
}

impl XTNorm {
    pub fn geometric(t_end: f64, eps: f64, octaves: usize) -> Self {
        XTNorm {
            t_end,
            eps,
            samples: (0..=octaves).rev().map(|j| t_end * 2f64.powi(-(j as i32))).collect(),
        }
    }

    pub fn weight(&self, t: f64) -> f64 {
        (t / self.eps).sqrt()
    }

    /// `values[k] = (‖v(t_k)‖, ‖∂_{x_N} v(t_k)‖)` at `samples[k]`.
    pub fn eval(&self, values: &[(f64, f64)]) -> f64 {
        self.samples
            .iter()
            .zip(values)
            .map(|(&t, (v, d))| v + self.weight(t) * d)
            .fold(0.0, f64::max)
    }
}

/// One stored time of a run (global time).
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    pub interval: usize,
    pub v: Field,
    pub w: Field,
    pub u: Field,
    pub dv_sup: f64,
    /// `‖D_ε[φ_b](t)‖` and `‖∂_{x_N} D_ε[φ_b](t)‖`, with `φ_b` the interval's boundary data
    pub d_eps_sup: f64,
    pub d_eps_dxn_sup: f64,
}

#[derive(Debug, Clone)]
pub struct IntervalRecord {
    pub t_start: f64,
    pub t_len: f64,
    pub iterations: usize,
    pub halvings: usize,
    /// trace-level residuals `max_j (ε⁻¹s_j)^{1/2} |g^{k+1}_j - g^k_j|`
    pub residuals: Vec<f64>,
    /// `‖v - Q_ε[v]‖_{X_T}` of the accepted iterate
    pub xt_residual: f64,
    pub xt_norm: f64,
    pub m: f64,
    /// boundary traces `∂_{x_N} v(·, 0, s)` and `w_b(s)` at the trace nodes (local time)
    pub g: TraceHistory,
    pub wb: TraceHistory,
}

#[derive(Debug, Clone)]
pub struct SolverRun {
    pub eps: f64,
    pub horizon: f64,
    pub m: f64,
    pub snapshots: Vec<Snapshot>,
    pub intervals: Vec<IntervalRecord>,
    pub failure: Option<String>,
}

impl SolverRun {
    pub fn t_star(&self) -> Option<f64> {
        self.intervals.first().map(|iv| iv.t_len)
    }

    pub fn iterations(&self) -> Vec<usize> {
        self.intervals.iter().map(|iv| iv.iterations).collect()
    }

    /// `(t, w_b(t))` at every trace node of every interval, global time.
    pub fn boundary_samples(&self) -> Vec<(f64, &BoundaryField)> {
        self.intervals
            .iter()
            .flat_map(|iv| iv.wb.times().iter().map(move |s| iv.t_start + s).zip(iv.wb.values()))
            .collect()
    }

    pub fn end_time(&self) -> f64 {
        self.intervals.last().map(|iv| iv.t_start + iv.t_len).unwrap_or(0.0)
    }
}

/// Operators and quadrature nodes for one interval, reused across Picard iterations.
struct IntervalCtx<'a> {
    prob: &'a PreparedProblem,
    cfg: SolverConfig,
    t_len: f64,
    rule: TimeQuadRule,
    times: Vec<f64>,
    /// per trace node: `∂_{x_N} S₁(ε⁻¹(t - s))` boundary rows at the quadrature nodes
    dxn_ops: Vec<Vec<(TimeNode, S1BoundaryDxn)>>,
    /// per trace node: boundary `S₂(t - r)` stencils at the quadrature nodes
    s2_ops: Vec<Vec<(TimeNode, LateralStencil)>>,
}

impl<'a> IntervalCtx<'a> {
    fn new(prob: &'a PreparedProblem, cfg: SolverConfig, t_len: f64) -> Result<Self> {
        let rule = duhamel_rule(cfg.time_nodes)?;
        let times = TraceHistory::geometric_times(t_len, cfg.trace_per_octave, cfg.n_trace());
        let g = &prob.grid;
        let h = g.lateral_spacing();
        let dxn_ops = times
            .par_iter()
            .map(|&t| {
                rule.nodes(t)
                    .into_iter()
                    .map(|nd| Ok((nd, S1BoundaryDxn::new(g, nd.rem / prob.eps)?)))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let s2_ops = times
            .par_iter()
            .map(|&t| {
                rule.nodes(t)
                    .into_iter()
                    .map(|nd| Ok((nd, LateralStencil::poisson(nd.rem, h, g.n_prime)?)))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(IntervalCtx {
            prob,
            cfg,
            t_len,
            rule,
            times,
            dxn_ops,
            s2_ops,
        })
    }

    fn layout(&self) -> (f64, usize, usize) {
        (self.t_len, self.cfg.trace_per_octave, self.times.len())
    }

    fn history(&self, power: f64, values: Vec<BoundaryField>) -> Result<TraceHistory> {
        TraceHistory::new(&self.prob.grid, self.t_len, self.cfg.trace_per_octave, power, None, values)
    }

    /// `∫_0^{s_j} [S₂(s_j - r) g(r)](·, 0) dr` at every trace node.
    fn wb_of(&self, g: &TraceHistory) -> Result<TraceHistory> {
        let n = self.prob.grid.n_prime;
        let values = self
            .s2_ops
            .par_iter()
            .map(|nodes| {
                let mut acc = vec![0.0; n];
                for (nd, st) in nodes {
                    st.apply_add(nd.weight, &g.eval(nd.s).values, &mut acc);
                }
                BoundaryField::new(self.prob.grid.clone(), acc)
            })
            .collect::<Result<Vec<_>>>()?;
        self.history(0.5, values)
    }

    /// `∫_0^{s_j} ∂_{x_N} S₁(ε⁻¹(s_j - s)) data(s) ds` on the boundary, every trace node.
    fn dxn_traces(&self, table: &ForcingTable) -> Result<Vec<BoundaryField>> {
        let n = self.prob.grid.n_prime;
        self.dxn_ops
            .par_iter()
            .map(|nodes| {
                let mut acc = vec![0.0; n];
                for (nd, op) in nodes {
                    let (nodal, cell) = table.data_at(nd.s);
                    let d = op.apply(nodal.as_ref(), Some(&cell));
                    for (a, v) in acc.iter_mut().zip(&d) {
                        *a += nd.weight * v;
                    }
                }
                BoundaryField::new(self.prob.grid.clone(), acc)
            })
            .collect()
    }

    fn residual(&self, a: &TraceHistory, b: &TraceHistory) -> f64 {
        a.values()
            .iter()
            .zip(b.values())
            .zip(&self.times)
            .map(|((x, y), &t)| {
                let d = x.values.iter().zip(&y.values).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
                (t / self.prob.eps).sqrt() * d
            })
            .fold(0.0, f64::max)
    }
}

/// Result of one `Q_ε` application on an interval.
#[derive(Debug, Clone)]
pub struct QOutput {
    /// boundary traces `∂_{x_N} Q_ε[v](·, 0, s)` at the trace nodes
    pub traces: TraceHistory,
    /// `(t, Q_ε[v](t), ∂_{x_N} Q_ε[v](t))` at the full-field times, when requested
    pub fields: Option<Vec<(f64, Field, Field)>>,
}

/// Affine pieces of `Q_ε` that do not depend on `v`.
struct Frozen {
    wb0: TraceHistory,
    table_d: ForcingTable,
    /// trace of `S₁(ε⁻¹t)Φ - D_ε[φ_b](t)`
    g0: TraceHistory,
}

fn frozen(ctx: &IntervalCtx) -> Result<Frozen> {
    let p = ctx.prob;
    let wb0 = boundary_history(&p.grid, Some(&p.phi_b), None, ctx.layout(), &ctx.rule)?;
    let table_d = ForcingTable::new(None, &wb0)?;
    let d = ctx.dxn_traces(&table_d)?;
    let values = ctx
        .times
        .par_iter()
        .zip(d)
        .map(|(&t, d)| {
            let mut main = S1BoundaryDxn::new(&p.grid, t / p.eps)?.apply(Some(&p.phi_cap), None);
            for (m, x) in main.iter_mut().zip(&d.values) {
                *m -= x;
            }
            BoundaryField::new(p.grid.clone(), main)
        })
        .collect::<Result<Vec<_>>>()?;
    let g0 = ctx.history(-0.5, values)?;
    Ok(Frozen { wb0, table_d, g0 })
}

// g ↦ trace of Q_ε[v]; also returns the D̃ table built from g.
fn picard_step(ctx: &IntervalCtx, fz: &Frozen, g: &TraceHistory) -> Result<(TraceHistory, ForcingTable, TraceHistory)> {
    let wb = ctx.wb_of(g)?;
    let table = ForcingTable::new(Some(g), &wb)?;
    let dt = ctx.dxn_traces(&table)?;
    let values = fz
        .g0
        .values()
        .iter()
        .zip(dt)
        .map(|(a, b)| {
            let mut x = a.clone();
            x.axpy(-1.0, &b);
            x
        })
        .collect();
    Ok((ctx.history(-0.5, values)?, table, wb))
}

/// `Q_ε[v] = S₁(ε⁻¹t)Φ - D_ε[φ_b] - D̃_ε[v]` on `(0, t_len]` for `v` given by its boundary
/// trace history (the only way `Q_ε` sees `v`).
pub fn q_eps_apply(
    prob: &PreparedProblem,
    g: &TraceHistory,
    t_len: f64,
    cfg: &SolverConfig,
    with_fields: bool,
) -> Result<QOutput> {
    cfg.validate()?;
    let ctx = IntervalCtx::new(prob, *cfg, t_len)?;
    if g.times() != ctx.times.as_slice() {
        return domain("trace history layout does not match the solver configuration");
    }
    let fz = frozen(&ctx)?;
    let (traces, table, _) = picard_step(&ctx, &fz, g)?;
    let fields = if with_fields {
        let out = full_targets(&ctx)
            .into_par_iter()
            .map(|(_, t)| {
                let (s, ds) = s1_both(prob, t)?;
                let mut f = duhamel_fields(&[&fz.table_d, &table], prob.eps, t, &ctx.rule)?;
                let (tv, td) = f.pop().unwrap();
                let (dv, dd) = f.pop().unwrap();
                Ok((t, s.sub(&dv).sub(&tv), ds.sub(&dd).sub(&td)))
            })
            .collect::<Result<Vec<_>>>()?;
        Some(out)
    } else {
        None
    };
    Ok(QOutput { traces, fields })
}

fn s1_both(prob: &PreparedProblem, t: f64) -> Result<(Field, Field)> {
    let op = S1Op::new(&prob.grid, t / prob.eps)?;
    let (v, d) = op.apply_mixed(Some(&prob.phi_cap), None, S1Output::Both);
    Ok((v.unwrap(), d.unwrap()))
}

// (trace index, time) of the stored full-field times: one per octave.
fn full_targets(ctx: &IntervalCtx) -> Vec<(usize, f64)> {
    let p = ctx.cfg.trace_per_octave;
    (0..ctx.times.len())
        .filter(|j| (ctx.times.len() - 1 - j) % p == 0)
        .map(|j| (j, ctx.times[j]))
        .collect()
}

/// Accepted solution on one interval, local time.
#[derive(Debug, Clone)]
pub struct IntervalSolution {
    pub record: IntervalRecord,
    pub snapshots: Vec<Snapshot>,
}

enum Attempt {
    Converged(Box<IntervalSolution>),
    Shrink(Vec<f64>),
}

/// Picard iteration on `(0, T]`, halving `T` when two consecutive residual ratios exceed the
/// threshold. `initial` overrides the default first iterate `S₁(ε⁻¹t)Φ - D_ε[φ_b]`.
pub fn solve_interval(
    prob: &PreparedProblem,
    t_guess: f64,
    cfg: &SolverConfig,
    initial: Option<&TraceHistory>,
) -> Result<IntervalSolution> {
    cfg.validate()?;
    if !(t_guess > 0.0) {
        return domain("interval length must be positive");
    }
    let mut t_len = t_guess;
    let mut halvings = 0;
    loop {
        if t_len < cfg.t_min {
            return Err(Error::Solver {
                reason: format!(
                    "no contracting interval above t_min = {:e}; the discretization is too coarse",
                    cfg.t_min
                ),
                t_start: 0.0,
                t_len,
            });
        }
        match attempt(prob, t_len, cfg, initial)? {
            Attempt::Converged(mut sol) => {
                sol.record.halvings = halvings;
                return Ok(*sol);
            }
            Attempt::Shrink(res) => {
                warn!("residual ratios {res:?} above threshold on T = {t_len:e}; halving");
                t_len *= 0.5;
                halvings += 1;
            }
        }
    }
}

fn attempt(prob: &PreparedProblem, t_len: f64, cfg: &SolverConfig, initial: Option<&TraceHistory>) -> Result<Attempt> {
    let ctx = IntervalCtx::new(prob, *cfg, t_len)?;
    let fz = frozen(&ctx)?;
    let mut g = match initial {
        Some(h) if h.times() == ctx.times.as_slice() => h.clone(),
        Some(_) => return domain("initial trace history layout does not match the interval"),
        None => fz.g0.clone(),
    };
    let tol = cfg.picard_tol * prob.m;
    let mut residuals: Vec<f64> = Vec::new();
    let mut high = 0;
    for it in 1..=cfg.max_iter {
        let (next, table, wb_in) = picard_step(&ctx, &fz, &g)?;
        let r = ctx.residual(&next, &g);
        if !r.is_finite() {
            return Err(Error::Solver {
                reason: "non-finite Picard residual".into(),
                t_start: 0.0,
                t_len,
            });
        }
        debug!("T = {t_len:e} iteration {it}: residual {r:e}");
        if let Some(&prev) = residuals.last() {
            if r > tol && prev > 0.0 && r / prev > cfg.ratio_threshold {
                high += 1;
                if high >= 2 {
                    residuals.push(r);
                    return Ok(Attempt::Shrink(residuals));
                }
            } else {
                high = 0;
            }
        }
        residuals.push(r);
        if r <= tol {
            let sol = accept(&ctx, &fz, g, next, table, wb_in, it, residuals)?;
            return Ok(Attempt::Converged(Box::new(sol)));
        }
        g = next;
    }
    Err(Error::Solver {
        reason: format!("Picard iteration cap {} reached (residuals {residuals:?})", cfg.max_iter),
        t_start: 0.0,
        t_len,
    })
}

// Full fields for the accepted iterate v = Q_ε[v^k] (trace `g_out`), with the X_T
// residual ‖v - Q_ε[v]‖ = ‖D̃_ε[v - v^k]‖.
#[allow(clippy::too_many_arguments)]
fn accept(
    ctx: &IntervalCtx,
    fz: &Frozen,
    g_in: TraceHistory,
    g_out: TraceHistory,
    table_in: ForcingTable,
    wb_in: TraceHistory,
    iterations: usize,
    residuals: Vec<f64>,
) -> Result<IntervalSolution> {
    let p = ctx.prob;
    let wb_out = ctx.wb_of(&g_out)?;
    let table_diff = ForcingTable::new(Some(&g_out.diff(&g_in)?), &wb_out.diff(&wb_in)?)?;
    // w_b of the accepted solution: S₂(s)φ_b + ∫ S₂(s - r) g_out(r) dr
    let wb_values: Vec<BoundaryField> = fz
        .wb0
        .values()
        .iter()
        .zip(wb_out.values())
        .map(|(a, b)| {
            let mut x = a.clone();
            x.axpy(1.0, b);
            x
        })
        .collect();
    let mut wb_total = wb_out.with_values(wb_values)?;
    wb_total.base = Some(p.phi_b.clone());
    let s2 = S2Op::new(&p.grid, 0.0)?;
    let targets = full_targets(ctx);
    let xt = XTNorm {
        t_end: ctx.t_len,
        eps: p.eps,
        samples: targets.iter().map(|t| t.1).collect(),
    };
    let per_target = targets
        .par_iter()
        .map(|&(j, t)| {
            let (s, ds) = s1_both(p, t)?;
            let mut f = duhamel_fields(&[&fz.table_d, &table_in, &table_diff], p.eps, t, &ctx.rule)?;
            let (rv, rd) = f.pop().unwrap();
            let (tv, td) = f.pop().unwrap();
            let (dv, dd) = f.pop().unwrap();
            let v = s.sub(&dv).sub(&tv);
            let dvx = ds.sub(&dd).sub(&td);
            let w = s2.apply(&wb_total.values()[j].values);
            let u = v.add(&w);
            let snap = Snapshot {
                t,
                interval: 0,
                dv_sup: dvx.sup(),
                d_eps_sup: dv.sup(),
                d_eps_dxn_sup: dd.sup(),
                v,
                w,
                u,
            };
            Ok((snap, (rv.sup(), rd.sup())))
        })
        .collect::<Result<Vec<_>>>()?;
    let (snapshots, res): (Vec<Snapshot>, Vec<(f64, f64)>) = per_target.into_iter().unzip();
    let norms: Vec<(f64, f64)> = snapshots.iter().map(|s| (s.v.sup(), s.dv_sup)).collect();
    let record = IntervalRecord {
        t_start: 0.0,
        t_len: ctx.t_len,
        iterations,
        halvings: 0,
        residuals,
        xt_residual: xt.eval(&res),
        xt_norm: xt.eval(&norms),
        m: p.m,
        g: g_out,
        wb: wb_total,
    };
    info!(
        "interval T = {:e}: {} iterations, X_T residual {:e}, ‖v‖_XT {:e}",
        record.t_len, record.iterations, record.xt_residual, record.xt_norm
    );
    Ok(IntervalSolution { record, snapshots })
}

/// Solve on `(0, horizon]` by concatenating contraction intervals. Each restart takes
/// `Φ = v(T₁)` and `φ_b = w_b(T₁)`, which is the same as restarting the original problem
/// from `u(T₁)` since `w(T₁) = S₂(0) w_b(T₁)`. A failing interval ends the run with the
/// finished intervals retained.
pub fn continue_global(prob: &PreparedProblem, horizon: f64, cfg: &SolverConfig) -> Result<SolverRun> {
    cfg.validate()?;
    if !(horizon > 0.0) {
        return domain("horizon must be positive");
    }
    let mut run = SolverRun {
        eps: prob.eps,
        horizon,
        m: prob.m,
        snapshots: Vec::new(),
        intervals: Vec::new(),
        failure: None,
    };
    let mut current = prob.clone();
    let mut t0 = 0.0;
    let mut t_guess = cfg.interval_guess.unwrap_or(1.0).min(horizon);
    while t0 < horizon * (1.0 - 1e-12) {
        let t_try = t_guess.min(horizon - t0);
        let sol = match solve_interval(&current, t_try, cfg, None) {
            Ok(s) => s,
            Err(e) => {
                let e = match e {
                    Error::Solver { reason, t_len, .. } => Error::Solver {
                        reason,
                        t_start: t0,
                        t_len,
                    },
                    other => other,
                };
                warn!("run stopped at t = {t0}: {e}");
                run.failure = Some(e.to_string());
                break;
            }
        };
        let k = run.intervals.len();
        let mut record = sol.record;
        record.t_start = t0;
        let last = sol.snapshots.last().expect("interval has snapshots");
        let next = PreparedProblem {
            grid: current.grid.clone(),
            phi_cap: last.v.clone(),
            phi_b: record.wb.values().last().unwrap().clone(),
            eps: current.eps,
            m: 16.0 * last.u.sup().max(record.wb.values().last().unwrap().sup()),
        };
        for mut s in sol.snapshots {
            s.t += t0;
            s.interval = k;
            run.snapshots.push(s);
        }
        t0 += record.t_len;
        t_guess = record.t_len;
        run.intervals.push(record);
        current = next;
    }
    Ok(run)
}
