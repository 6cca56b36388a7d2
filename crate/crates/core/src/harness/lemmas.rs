use std::f64::consts::{E, PI};
use std::fmt::Write as _;
use std::sync::Arc;

use log::info;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{compact_gap, sci, SmoothData};
use crate::config::{grid_from, GridConfig, RunConfig};
use crate::duhamel_ops::{d_eps_eval, duhamel_rule, f1_eval, f2_eval, h_factor, TraceHistory};
use crate::error::{Error, Result};
use crate::grid::{strip_sup_norm, BoundaryField, Field, HalfSpaceGrid};
use crate::kernels::{
    dirichlet_heat_kernel, dirichlet_kernel_dxn, gamma1, normalization_constant, poisson_cap_mass_3d,
    poisson_dyn_kernel, poisson_dyn_kernel_dt, poisson_tail_2d, Dim, KernelPoint,
};
use crate::semigroups::{S1Op, S1Output, S2Op};
use crate::solver::{prepare, q_eps_apply, solve_interval, PreparedProblem, XTNorm};
use crate::special::gauss_legendre;

/// Slack on the sup-norm inequalities.
pub const INEQUALITY_SLACK: f64 = 1e-4;
/// Allowed relative change of a calibrated constant under one refinement.
pub const CALIBRATION_DRIFT: f64 = 0.2;
/// Allowed contraction ratio of `Q_ε` on the selected interval.
pub const CONTRACTION_LIMIT: f64 = 0.5;

/// One verified property: `observed ≤ allowed`.
#[derive(Debug, Clone)]
pub struct LemmaEntry {
    pub group: &'static str,
    pub name: &'static str,
    pub passed: bool,
    pub observed: f64,
    pub allowed: f64,
    pub detail: String,
}

impl LemmaEntry {
    /// Relative slack `1 - observed/allowed` (`-observed` when nothing is allowed).
    pub fn margin(&self) -> f64 {
        if self.allowed > 0.0 {
            1.0 - self.observed / self.allowed
        } else {
            -self.observed
        }
    }
}

#[derive(Debug, Clone)]
pub struct LemmaReport {
    pub seed: u64,
    pub entries: Vec<LemmaEntry>,
}

impl LemmaReport {
    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.passed)
    }

    pub fn get(&self, name: &str) -> Option<&LemmaEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn group_passes(&self, group: &str) -> bool {
        self.entries.iter().filter(|e| e.group == group).all(|e| e.passed)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# dynbc lemma suite");
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "entries = {}", self.entries.len());
        let _ = writeln!(s, "failed = {}", self.entries.iter().filter(|e| !e.passed).count());
        for e in &self.entries {
            let _ = writeln!(s, "\n[{}.{}]", e.group, e.name);
            let _ = writeln!(s, "status = {}", if e.passed { "pass" } else { "fail" });
            let _ = writeln!(s, "observed = {}", sci(e.observed));
            let _ = writeln!(s, "allowed = {}", sci(e.allowed));
            let _ = writeln!(s, "margin = {}", sci(e.margin()));
            let _ = writeln!(s, "detail = {}", e.detail);
        }
        s
    }
}

type Check = Result<(f64, f64, String)>;

fn entry(group: &'static str, name: &'static str, f: impl FnOnce() -> Check) -> LemmaEntry {
    let (passed, observed, allowed, detail) = match f() {
        Ok((o, a, d)) => (o <= a, o, a, d),
        Err(e) => (false, f64::NAN, f64::NAN, format!("error: {e}")),
    };
    info!("verify: {group}.{name} {}", if passed { "pass" } else { "FAIL" });
    LemmaEntry {
        group,
        name,
        passed,
        observed,
        allowed,
        detail,
    }
}

// Gauss–Legendre over the panels between consecutive breakpoints.
fn gl_panels(mut f: impl FnMut(f64) -> f64, breaks: &[f64], nodes: &(Vec<f64>, Vec<f64>)) -> f64 {
    let (x, w) = nodes;
    breaks
        .windows(2)
        .map(|p| {
            let (c, r) = ((p[0] + p[1]) / 2.0, (p[1] - p[0]) / 2.0);
            x.iter().zip(w).map(|(xi, wi)| wi * r * f(c + r * xi)).sum::<f64>()
        })
        .sum()
}

fn uniform_breaks(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect()
}

// 0, σ/8, σ/4, … doubling up to `far`
fn doubling_breaks(sigma: f64, far: f64) -> Vec<f64> {
    let mut b = vec![0.0];
    let mut x = sigma / 8.0;
    while x < far {
        b.push(x);
        x *= 2.0;
    }
    b.push(far);
    b
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    10f64.powf(rng.gen_range(lo.log10()..hi.log10()))
}

fn kernel_entries(rng: &mut ChaCha8Rng) -> Vec<LemmaEntry> {
    const G: &str = "kernels";
    let samples: Vec<(f64, f64)> = (0..10)
        .map(|_| (rng.gen_range(0.0..3.0), log_uniform(rng, 1e-3, 10.0)))
        .collect();
    let gl = gauss_legendre(24);
    let mut out = vec![
        entry(G, "poisson_mass_n2", || {
            let mut worst = 0.0f64;
            for &(xn, t) in &samples {
                let sigma = xn + t;
                let far = 1e3 * sigma;
                let inner = gl_panels(|x| poisson_dyn_kernel(&[x], xn, t).unwrap_or(f64::NAN), &doubling_breaks(sigma, far), &gl);
                worst = worst.max((2.0 * inner + 2.0 * poisson_tail_2d(far, sigma) - 1.0).abs());
            }
            Ok((worst, 1e-8, "max |∫P dx' - 1| over 10 (x_N, t), truncated quadrature plus analytic tails".into()))
        }),
        entry(G, "poisson_mass_n3", || {
            let mut worst = 0.0f64;
            for &(xn, t) in &samples {
                let sigma = xn + t;
                let far = 1e3 * sigma;
                let f = |r: f64| 2.0 * PI * r * poisson_dyn_kernel(&[r, 0.0], xn, t).unwrap_or(f64::NAN);
                let inner = gl_panels(f, &doubling_breaks(sigma, far), &gl);
                worst = worst.max((inner + poisson_cap_mass_3d(far, sigma) - 1.0).abs());
            }
            Ok((worst, 1e-8, "max |∫P dx' - 1| over 10 (x_N, t), polar quadrature plus analytic cap".into()))
        }),
        entry(G, "normalization_constants", || {
            let e2 = (normalization_constant(2)? - 1.0 / PI).abs();
            let e3 = (normalization_constant(3)? - 0.5 / PI).abs();
            Ok((e2.max(e3), 1e-9, format!("|c_2 - 1/π| = {}, |c_3 - 1/(2π)| = {}", sci(e2), sci(e3))))
        }),
    ];
    let times: Vec<f64> = (0..5).map(|_| log_uniform(rng, 1e-2, 1e2)).collect();
    let gl16 = gauss_legendre(16);
    // ∫∫ |K(x, y, t)| dy' dy_N on a tensor Gauss–Legendre grid
    let abs_k = move |xn: f64, t: f64, depth_panels: usize| -> Result<f64> {
        let r = 12.0 * t.sqrt();
        let lat = uniform_breaks(-r, r, 16);
        let dep = uniform_breaks(0.0, xn + r, depth_panels);
        let mut err = None;
        let v = gl_panels(
            |yl| {
                gl_panels(
                    |yn| match KernelPoint::new(vec![0.0, xn], vec![yl, yn], t).and_then(|p| dirichlet_kernel_dxn(&p)) {
                        Ok(k) => k.abs(),
                        Err(e) => {
                            err.get_or_insert(e.to_string());
                            0.0
                        }
                    },
                    &dep,
                    &gl16,
                )
            },
            &lat,
            &gl16,
        );
        match err {
            Some(e) => Err(Error::Numerical(e)),
            None => Ok(v),
        }
    };
    out.push(entry(G, "abs_k_mass_boundary", || {
        let mut worst = 0.0f64;
        for &t in &times {
            let exact = (PI * t).powf(-0.5);
            worst = worst.max((abs_k(0.0, t, 16)? - exact).abs() / exact);
        }
        Ok((worst, 1e-6, "max relative gap of ∫|K|dy at x_N = 0 from (πt)^{-1/2}, 5 sampled t".into()))
    }));
    out.push(entry(G, "abs_k_mass_interior", || {
        let mut worst = 0.0f64;
        for &t in &times {
            for a in [0.1, 0.5, 2.0] {
                worst = worst.max(abs_k(a * t.sqrt(), t, 96)? * (PI * t).sqrt());
            }
        }
        Ok((worst, 1.0 + 1e-6, "max (πt)^{1/2}∫|K|dy over x_N > 0".into()))
    }));
    let pts: Vec<(f64, f64, f64, f64)> = (0..1000)
        .map(|_| {
            (
                rng.gen_range(-5.0..5.0),
                rng.gen_range(-5.0..5.0),
                rng.gen_range(0.0..3.0),
                log_uniform(rng, 1e-3, 1e2),
            )
        })
        .collect();
    out.push(entry(G, "poisson_dt_ratio", || {
        let mut worst = 0.0f64;
        for &(a, b, xn, t) in &pts {
            for (x, n) in [(vec![a], 2.0f64), (vec![a, b], 3.0)] {
                let p = poisson_dyn_kernel(&x, xn, t)?;
                let dp = poisson_dyn_kernel_dt(&x, xn, t)?;
                if p > 0.0 {
                    worst = worst.max(dp.abs() * (xn + t) / (n - 1.0).max(1.0) / p);
                }
            }
        }
        Ok((worst, 1.0 + 1e-12, "max |∂_tP|(x_N+t)/(max(1,N-1)P), N = 2, 3, 1000 points".into()))
    }));
    out.push(entry(G, "dirichlet_positivity", || {
        let mut worst = 0.0f64;
        for &(a, b, xn, t) in &pts {
            let inside = dirichlet_heat_kernel(&KernelPoint::new(vec![a, xn], vec![b, 0.5 * xn + 0.1], t)?)?;
            let edge = dirichlet_heat_kernel(&KernelPoint::new(vec![a, 0.0], vec![b, xn], t)?)?;
            worst = worst.max((-inside).max(0.0)).max(edge.abs());
        }
        Ok((worst, 0.0, "largest negative interior value or nonzero boundary value of Γ_D".into()))
    }));
    out
}

// rough (independent node values) on even instances, smooth on odd ones
fn random_interior(g: &Arc<HalfSpaceGrid>, rng: &mut ChaCha8Rng, k: usize) -> Result<Field> {
    if k % 2 == 0 {
        Field::new(g.clone(), (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect())
    } else {
        SmoothData::random(rng).field(g)
    }
}

fn random_boundary(g: &Arc<HalfSpaceGrid>, rng: &mut ChaCha8Rng, k: usize) -> Result<BoundaryField> {
    if k % 2 == 0 {
        BoundaryField::new(g.clone(), (0..g.n_prime).map(|_| rng.gen_range(-1.0..1.0)).collect())
    } else {
        SmoothData::random(rng).boundary(g)
    }
}

fn semigroup_entries(g: &Arc<HalfSpaceGrid>, n: usize, rng: &mut ChaCha8Rng) -> Vec<LemmaEntry> {
    const G: &str = "semigroups";
    let slack = 1.0 + INEQUALITY_SLACK;
    // instances are drawn up front so the parallel evaluation stays seed-deterministic
    let s1_data: Vec<(Field, f64)> = (0..n)
        .map(|k| Ok((random_interior(g, rng, k)?, log_uniform(rng, 1e-2, 1e2))))
        .collect::<Result<_>>()
        .unwrap_or_default();
    let s2_data: Vec<(BoundaryField, f64)> = (0..n)
        .map(|k| Ok((random_boundary(g, rng, k)?, log_uniform(rng, 1e-2, 1e2))))
        .collect::<Result<_>>()
        .unwrap_or_default();
    let s1_ratios = s1_data
        .par_iter()
        .map(|(phi, tau)| {
            let (v, d) = S1Op::new(g, *tau)?.apply_mixed(Some(phi), None, S1Output::Both);
            let s = phi.sup().max(f64::MIN_POSITIVE);
            Ok((v.unwrap().sup() / s, tau.sqrt() * d.unwrap().sup() / s))
        })
        .collect::<Result<Vec<_>>>();
    let s2_ratios = s2_data
        .par_iter()
        .map(|(psi, t)| {
            let f = S2Op::new(g, *t)?.apply(&psi.values);
            let s = psi.sup().max(f64::MIN_POSITIVE);
            let trace = f.row(0).iter().fold(0.0f64, |m, v| m.max(v.abs()));
            Ok((trace / s, f.sup() / s))
        })
        .collect::<Result<Vec<_>>>();
    let pick = |r: &Result<Vec<(f64, f64)>>, second: bool| -> Result<f64> {
        match r {
            Ok(v) if v.len() == n => Ok(v.iter().map(|p| if second { p.1 } else { p.0 }).fold(0.0, f64::max)),
            Ok(_) => Err(Error::Numerical("instance generation failed".into())),
            Err(e) => Err(Error::Numerical(e.to_string())),
        }
    };
    let desc = |what: &str| format!("max {what} over {n} random bounded instances, τ, t ∈ [1e-2, 1e2]");
    let mut out = vec![
        entry(G, "s1_sup_bound", || Ok((pick(&s1_ratios, false)?, slack, desc("‖S₁(τ)φ‖/‖φ‖")))),
        entry(G, "s1_dxn_bound", || Ok((pick(&s1_ratios, true)?, slack, desc("τ^{1/2}‖∂_{x_N}S₁(τ)φ‖/‖φ‖")))),
        entry(G, "s2_trace_bound", || Ok((pick(&s2_ratios, false)?, slack, desc("|[S₂(t)ψ]_{x_N=0}|/|ψ|")))),
        entry(G, "s2_field_bound", || Ok((pick(&s2_ratios, true)?, slack, desc("‖S₂(t)ψ‖/|ψ|")))),
    ];
    out.push(entry(G, "s1_dxn_constant_sharpness", || {
        let (_, d) = S1Op::new(g, 1.0)?.apply_mixed(Some(&Field::constant(g, 1.0)), None, S1Output::Derivative);
        let d = d.unwrap();
        let exact = PI.powf(-0.5);
        let gap = d.row(0).iter().fold(0.0f64, |m, v| m.max((v - exact).abs()));
        Ok((gap, 1e-6, "max |∂_{x_N}S₁(1)1 - π^{-1/2}| on the boundary (strictly inside the bound 1)".into()))
    }));
    out.push(entry(G, "s1_strip_bound", || {
        let one = Field::constant(g, 1.0);
        let mut worst = 0.0f64;
        for tau in [0.5, 2.0, 10.0, 100.0] {
            let v = S1Op::new(g, tau)?.apply_mixed(Some(&one), None, S1Output::Value).0.unwrap();
            for ls in [0.5, 1.0] {
                worst = worst.max(strip_sup_norm(&v, ls)? / (2.0 * ls / (4.0 * PI * tau).sqrt()));
            }
        }
        Ok((worst, slack, "max strip sup of S₁(τ)1 over 2L(4πτ)^{-1/2}".into()))
    }));
    out.push(entry(G, "zero_maps_to_zero", || {
        let z = Field::zeros(g);
        let zb = BoundaryField::zeros(g);
        let (v, d) = S1Op::new(g, 0.3)?.apply_mixed(Some(&z), None, S1Output::Both);
        let s2 = S2Op::new(g, 0.3)?.apply(&zb.values);
        let rule = duhamel_rule(16)?;
        let f1 = f1_eval(&zb, 0.3)?;
        let (dv, dd) = d_eps_eval(&zb, 0.1, 0.3, &rule)?;
        let tr = TraceHistory::zeros(g, 0.5, 2, 9, -0.5)?;
        let f2 = f2_eval(&tr, 0.4, &rule)?;
        let m = [v.unwrap().sup(), d.unwrap().sup(), s2.sup(), f1.sup(), dv.sup(), dd.sup(), f2.sup()]
            .into_iter()
            .fold(0.0, f64::max);
        Ok((m, 0.0, "largest output of S₁, ∂S₁, S₂, F₁, F₂, D_ε on zero data".into()))
    }));
    out
}

// wide box so that the |x'|^{-2} tails of the composed field stay off the sampled set
fn identity_entries(rng: &mut ChaCha8Rng) -> Vec<LemmaEntry> {
    const G: &str = "identities";
    let cfgs: Vec<(f64, f64, usize)> = (0..10)
        .map(|_| (rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0), rng.gen_range(1..33)))
        .collect();
    let setup = || -> Result<(Arc<HalfSpaceGrid>, BoundaryField)> {
        let g = Arc::new(HalfSpaceGrid::stretched(Dim::new(2)?, 48.0, 4.0, 385, 33, 1.0, 16)?);
        let psi = BoundaryField::from_fn(&g, |x| (-(x - 0.3).powi(2)).exp() - 0.5 * (-(x + 1.0).powi(2) / 0.5).exp())?;
        Ok((g, psi))
    };
    vec![
        entry(G, "s2_translation", || {
            let (g, psi) = setup()?;
            let mut worst = 0.0f64;
            for &(t, _, k) in &cfgs {
                let s = S2Op::new(&g, t)?.apply(&psi.values);
                let shifted = S2Op::new(&g, t + g.depth()[k])?.apply(&psi.values);
                worst = s.row(k).iter().zip(shifted.row(0)).fold(worst, |m, (a, b)| m.max((a - b).abs()));
            }
            Ok((worst, 1e-5, "max |[S₂(t)ψ](x', a) - [S₂(t+a)ψ](x', 0)| at 10 sampled (t, a)".into()))
        }),
        entry(G, "s2_composition", || {
            let (g, psi) = setup()?;
            let mut worst = 0.0f64;
            for &(t, t2, _) in &cfgs {
                let inner = S2Op::new(&g, t2)?.apply(&psi.values).trace();
                let composed = S2Op::new(&g, t)?.apply(&inner.values);
                let direct = S2Op::new(&g, t + t2)?.apply(&psi.values);
                worst = worst.max(compact_gap(&composed, &direct, 2.0, 1.0));
            }
            Ok((worst, 1e-5, "max |S₂(t)S₂(t')ψ - S₂(t+t')ψ| on |x'| ≤ 2, x_N ≤ 1, 10 sampled (t, t')".into()))
        }),
    ]
}

/// `(coarse, fine)` grids and duhamel node counts for the calibrated suites.
struct Levels {
    grids: [GridConfig; 2],
    nodes: [usize; 2],
    horizon: f64,
    per_octave: usize,
    octaves: usize,
}

fn stability(name: &str, c: [f64; 2]) -> (f64, f64, String) {
    let drift = if c[0] > 0.0 { (c[1] / c[0] - 1.0).abs() } else { f64::INFINITY };
    (
        drift,
        CALIBRATION_DRIFT,
        format!("{name}: C_coarse = {}, C_fine = {}", sci(c[0]), sci(c[1])),
    )
}

fn bound_entries(lv: &Levels, rng: &mut ChaCha8Rng) -> Vec<LemmaEntry> {
    const G: &str = "bound_suites";
    let data: Vec<SmoothData> = (0..2).map(|_| SmoothData::random(rng)).collect();
    let f1_times: Vec<f64> = (0..6).map(|_| log_uniform(rng, 1e-2, 10.0)).collect();
    let eps_list = [1e-1, 1e-2, 1e-3];
    let t_list = [1e-3, 1e-2, 1e-1, 0.5];
    let cauchy = |g: &Arc<HalfSpaceGrid>| BoundaryField::from_fn(g, |x| 1.0 / (1.0 + x * x));
    let boundary_data = |g: &Arc<HalfSpaceGrid>| -> Result<Vec<BoundaryField>> {
        let mut v = vec![cauchy(g)?];
        for d in &data {
            v.push(d.boundary(g)?);
        }
        Ok(v)
    };

    // F₁: sup over depth rows of ‖F₁(·, y, s)‖(y + s)/|φ_b|
    let f1_c = |level: usize| -> Result<f64> {
        let g = grid_from(&lv.grids[level], eps_list[0], lv.horizon)?;
        let mut c = 0.0f64;
        for pb in boundary_data(&g)? {
            for &s in &f1_times {
                let f = f1_eval(&pb, s)?;
                for (k, &y) in g.depth().iter().enumerate() {
                    let row = f.row(k).iter().fold(0.0f64, |m, v| m.max(v.abs()));
                    c = c.max(row * (y + s) / pb.sup());
                }
            }
        }
        Ok(c)
    };
    let f1 = [0, 1].map(f1_c);

    // D_ε value and derivative constants from the same evaluations
    let d_c = |level: usize| -> Result<(f64, f64)> {
        let rule = duhamel_rule(lv.nodes[level])?;
        let mut jobs = Vec::new();
        for &eps in &eps_list {
            let g = grid_from(&lv.grids[level], eps, lv.horizon)?;
            for pb in boundary_data(&g)? {
                for &t in &t_list {
                    jobs.push((pb.clone(), eps, t));
                }
            }
        }
        let r = jobs
            .par_iter()
            .map(|(pb, eps, t)| {
                let (v, d) = d_eps_eval(pb, *eps, *t, &rule)?;
                let s = pb.sup();
                Ok((
                    v.sup() / (t.powf(0.25) * (eps.sqrt() + t.powf(0.75)) * s),
                    d.sup() * t.powf(0.25) / (eps.powf(0.75) * s),
                ))
            })
            .collect::<Result<Vec<(f64, f64)>>>()?;
        Ok(r.into_iter().fold((0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1))))
    };
    let d = [0, 1].map(d_c);

    // F₂ on the explicit family v = f(x') ρ(x_N/ℓ(t)), ρ(z) = z e^{-z}, ℓ = c (t/ε)^{1/2}:
    // ‖v‖_{X_T} = |f|(1/e + 1/c) and ∂_{x_N}v(x', 0, s) = f(x') ε^{1/2}/(c s^{1/2})
    let f2_c = |level: usize| -> Result<f64> {
        let rule = duhamel_rule(lv.nodes[level])?;
        let n_trace = lv.per_octave * lv.octaves + 1;
        let mut jobs = Vec::new();
        for &eps in &eps_list {
            let g = grid_from(&lv.grids[level], eps, lv.horizon)?;
            let f = data[0].boundary(&g)?;
            for c in [0.5, 2.0] {
                for &t in &t_list {
                    jobs.push((g.clone(), f.clone(), eps, c, t));
                }
            }
        }
        let r = jobs
            .par_iter()
            .map(|(g, f, eps, c, t)| {
                let scale = eps.sqrt() / c;
                let tr = TraceHistory::from_fn(g, lv.horizon, lv.per_octave, n_trace, -0.5, |s| {
                    let mut b = f.clone();
                    b.values.iter_mut().for_each(|v| *v *= scale / s.sqrt());
                    Ok(b)
                })?;
                let norm = f.sup() * (1.0 / E + 1.0 / c);
                let field = f2_eval(&tr, *t, &rule)?;
                let mut worst = 0.0f64;
                for (k, &y) in g.depth().iter().enumerate().skip(1) {
                    let rhs = eps.sqrt() * (t.powf(-0.5) + h_factor(y, *t)) * norm;
                    let row = field.row(k).iter().fold(0.0f64, |m, v| m.max(v.abs()));
                    worst = worst.max(row / rhs);
                }
                Ok(worst)
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(r.into_iter().fold(0.0, f64::max))
    };
    let f2 = [0, 1].map(f2_c);

    let both = |a: &[Result<f64>; 2]| -> Result<[f64; 2]> {
        match a {
            [Ok(x), Ok(y)] => Ok([*x, *y]),
            [Err(e), _] | [_, Err(e)] => Err(Error::Numerical(e.to_string())),
        }
    };
    let d_val = d.each_ref().map(|r| r.as_ref().map(|p| p.0).map_err(|e| Error::Numerical(e.to_string())));
    let d_dxn = d.each_ref().map(|r| r.as_ref().map(|p| p.1).map_err(|e| Error::Numerical(e.to_string())));
    let mut out = vec![
        entry(G, "f1_bound", || {
            let c = both(&f1)?;
            Ok((c[1], 1.0 + INEQUALITY_SLACK, "calibrated C in ‖F₁(y, s)‖ ≤ C(y+s)^{-1}|φ_b| must not exceed max(1, N-1)".into()))
        }),
        entry(G, "f1_bound_stability", || Ok(stability("‖F₁(y, s)‖ ≤ C(y+s)^{-1}|φ_b|", both(&f1)?))),
        entry(G, "d_eps_bound", || Ok(stability("‖D_ε(t)‖ ≤ C t^{1/4}(ε^{1/2}+t^{3/4})|φ_b|", both(&d_val)?))),
        entry(G, "d_eps_dxn_bound", || Ok(stability("‖∂_{x_N}D_ε(t)‖ ≤ C ε^{3/4}t^{-1/4}|φ_b|", both(&d_dxn)?))),
        entry(G, "f2_master_bound", || {
            Ok(stability("|F₂[v](x, t)| ≤ C ε^{1/2}(t^{-1/2}+h(x_N, t))‖v‖_{X_T}", both(&f2)?))
        }),
    ];
    // ∫_0^∞ (|x±y|/t)Γ₁(x±y, t) y^{-α} dy ≤ C t^{-(α+1)/2}; y = z^p with p = 1/(1-α)
    let moment_pts: Vec<(f64, f64)> = (0..20).map(|_| (rng.gen_range(-3.0..3.0), log_uniform(rng, 1e-2, 1e2))).collect();
    for (alpha, name) in [(0.0, "gauss_moment_alpha_0"), (0.5, "gauss_moment_alpha_1_2"), (0.75, "gauss_moment_alpha_3_4")] {
        out.push(entry(G, name, || {
            let p = 1.0 / (1.0 - alpha);
            let c_at = |panels: usize, nodes: usize| {
                let gl = gauss_legendre(nodes);
                let mut c = 0.0f64;
                for &(x, t) in &moment_pts {
                    let zb = x.abs().powf(1.0 / p);
                    let zf = (x.abs() + 14.0 * t.sqrt()).powf(1.0 / p);
                    let mut breaks = uniform_breaks(0.0, zb, panels);
                    breaks.extend(uniform_breaks(zb, zf, panels).into_iter().skip(1));
                    for sign in [1.0, -1.0] {
                        let f = |z: f64| {
                            let y = z.powf(p);
                            let a = x + sign * y;
                            p * a.abs() / t * gamma1(a, t)
                        };
                        let i = gl_panels(f, &breaks, &gl);
                        c = c.max(i * t.powf((alpha + 1.0) / 2.0));
                    }
                }
                c
            };
            Ok(stability(&format!("α = {alpha}, 20 sampled (x, t)"), [c_at(4, 8), c_at(8, 16)]))
        }));
    }
    out
}

fn duhamel_entries(g: &Arc<HalfSpaceGrid>, tol: f64, nodes: usize) -> Vec<LemmaEntry> {
    const G: &str = "duhamel";
    let pb = BoundaryField::from_fn(g, |x| 1.0 / (1.0 + x * x));
    vec![
        entry(G, "f1_of_constant_is_zero", || {
            let one = BoundaryField::constant(g, 1.0);
            let mut m = 0.0f64;
            for s in [1e-2, 0.1, 1.0] {
                m = m.max(f1_eval(&one, s)?.sup());
            }
            Ok((m, 1e-6, "max ‖F₁[1](s)‖, s ∈ {0.01, 0.1, 1}".into()))
        }),
        entry(G, "d_eps_time_refinement", || {
            let pb = pb?;
            let (a, _) = d_eps_eval(&pb, 0.1, 0.3, &duhamel_rule(nodes)?)?;
            let (b, _) = d_eps_eval(&pb, 0.1, 0.3, &duhamel_rule(2 * nodes)?)?;
            Ok((a.sub(&b).sup() / pb.sup(), 10.0 * tol, format!("‖D_ε({nodes} nodes) - D_ε({} nodes)‖/|φ_b| at ε = 0.1, t = 0.3", 2 * nodes)))
        }),
        entry(G, "d_eps_linearity", || {
            let a = BoundaryField::from_fn(g, |x| 1.0 / (1.0 + x * x))?;
            let b = BoundaryField::from_fn(g, |x| (x - 0.5).sin())?;
            let mut c = a.clone();
            c.values.iter_mut().zip(&b.values).for_each(|(x, y)| *x = 2.0 * *x - 3.0 * y);
            let rule = duhamel_rule(16)?;
            let (va, _) = d_eps_eval(&a, 0.05, 0.3, &rule)?;
            let (vb, _) = d_eps_eval(&b, 0.05, 0.3, &rule)?;
            let (vc, _) = d_eps_eval(&c, 0.05, 0.3, &rule)?;
            let lin = va.scaled(2.0).sub(&vb.scaled(3.0));
            Ok((vc.sub(&lin).sup() / (1.0 + lin.sup()), 1e-12, "‖D_ε[2a-3b] - 2D_ε[a] + 3D_ε[b]‖ relative".into()))
        }),
    ]
}

/// Largest `‖Q_ε[v₁] - Q_ε[v₂]‖_{X_T} / ‖v₁ - v₂‖_{X_T}` over random pairs in the solver's
/// ball, on the interval length the solver selects for the configured problem. Returns
/// `(ratio, T_star)`.
///
/// `Q_ε[v₁] - Q_ε[v₂]` is `Q_ε` of the difference for zero data, and `Q_ε` only sees `v`
/// through its boundary trace, so each pair is one application on explicit fields
/// `v = f(x')ρ(x_N/ℓ(t))`, `ρ(z) = z e^{-z}`, `ℓ = c(t/ε)^{1/2}`.
pub fn contraction_check(cfg: &RunConfig, pairs: usize, rng: &mut ChaCha8Rng) -> Result<(f64, f64)> {
    let eps = cfg.problem.eps;
    let spec = cfg.problem_for(eps)?;
    let prob = prepare(&spec)?;
    let scfg = cfg.solver_config();
    let guess = scfg.interval_guess.unwrap_or(1.0).min(spec.horizon);
    let t_star = solve_interval(&prob, guess, &scfg, None)?.record.t_len;
    let g = prob.grid.clone();
    let zero = PreparedProblem {
        grid: g.clone(),
        phi_cap: Field::zeros(&g),
        phi_b: BoundaryField::zeros(&g),
        eps,
        m: prob.m,
    };
    let m = prob.m.max(1.0);
    let xt = XTNorm::geometric(t_star, eps, scfg.octaves);
    let n_trace = scfg.trace_per_octave * scfg.octaves + 1;
    let mut worst = 0.0f64;
    for _ in 0..pairs {
        // two ball members: (f, c) with |f|(1/e + 1/c) ≤ m
        let mut member = || -> Result<(BoundaryField, f64)> {
            let c = rng.gen_range(0.3..3.0);
            let mut f = SmoothData::random(rng).boundary(&g)?;
            let scale = rng.gen_range(0.2..1.0) * m / (f.sup().max(1e-300) * (1.0 / E + 1.0 / c));
            f.values.iter_mut().for_each(|v| *v *= scale);
            Ok((f, c))
        };
        let (f1, c1) = member()?;
        let (f2, c2) = member()?;
        let trace = TraceHistory::from_fn(&g, t_star, scfg.trace_per_octave, n_trace, -0.5, |s| {
            let k = (eps / s).sqrt();
            let v = f1.values.iter().zip(&f2.values).map(|(a, b)| k * (a / c1 - b / c2)).collect();
            BoundaryField::new(g.clone(), v)
        })?;
        let q = q_eps_apply(&zero, &trace, t_star, &scfg, true)?.fields.unwrap_or_default();
        if q.len() != xt.samples.len() {
            return Err(Error::Numerical("contraction: stored times do not match the norm samples".into()));
        }
        let q_parts: Vec<(f64, f64)> = q.iter().map(|(_, v, d)| (v.sup(), d.sup())).collect();
        let v_parts: Vec<(f64, f64)> = xt
            .samples
            .iter()
            .map(|&t| {
                let (l1, l2) = (c1 * (t / eps).sqrt(), c2 * (t / eps).sqrt());
                let (mut sv, mut sd) = (0.0f64, 0.0f64);
                for &y in g.depth() {
                    let (z1, z2) = (y / l1, y / l2);
                    let (r1, r2) = (z1 * (-z1).exp(), z2 * (-z2).exp());
                    let (d1, d2) = ((1.0 - z1) * (-z1).exp() / l1, (1.0 - z2) * (-z2).exp() / l2);
                    for (a, b) in f1.values.iter().zip(&f2.values) {
                        sv = sv.max((a * r1 - b * r2).abs());
                        sd = sd.max((a * d1 - b * d2).abs());
                    }
                }
                (sv, sd)
            })
            .collect();
        let denom = xt.eval(&v_parts);
        if denom > 0.0 {
            worst = worst.max(xt.eval(&q_parts) / denom);
        }
    }
    Ok((worst, t_star))
}

/// Every kernel, semigroup and Duhamel property over seeded random data, the calibrated bound
/// suites under one refinement, and the contraction check. Failures are recorded as entries.
pub fn run_lemma_suite(cfg: &RunConfig) -> LemmaReport {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut entries = kernel_entries(&mut rng);
    let eps = cfg.problem.eps;
    let horizon = cfg.problem.horizon;
    match cfg.grid_for(eps) {
        Ok(g) => {
            entries.extend(semigroup_entries(&g, cfg.harness.instances, &mut rng));
            entries.extend(duhamel_entries(&g, cfg.quadrature.tol, cfg.quadrature.duhamel_nodes));
        }
        Err(e) => entries.push(entry("semigroups", "grid", || Err(e))),
    }
    entries.extend(identity_entries(&mut rng));
    let lv = Levels {
        grids: [cfg.grid.coarsened(), cfg.grid.clone()],
        nodes: [(cfg.quadrature.duhamel_nodes / 2).max(2), cfg.quadrature.duhamel_nodes],
        horizon,
        per_octave: cfg.quadrature.trace_per_octave,
        octaves: cfg.quadrature.octaves,
    };
    entries.extend(bound_entries(&lv, &mut rng));
    let pairs = cfg.harness.contraction_pairs;
    entries.push(entry("contraction", "q_eps_contraction", || {
        let (ratio, t_star) = contraction_check(cfg, pairs, &mut rng)?;
        Ok((
            ratio,
            CONTRACTION_LIMIT,
            format!("max ‖Q_ε[v₁]-Q_ε[v₂]‖/‖v₁-v₂‖ in X_T over {pairs} pairs, ε = {eps}, T_star = {}", sci(t_star)),
        ))
    }));
    LemmaReport { seed: cfg.seed, entries }
}
