//! Time quadrature for `∫_0^t f(s) ds` with algebraic endpoint singularities.
//!
//! `s = t sin²θ` absorbs `s^{-1/2}` and `(t-s)^{-1/2}`. Each half of `[0, π/2]` is then
//! mapped by a power `θ = (π/4) u^q` (mirrored at `π/2`) chosen from the declared
//! exponent, and `u ∈ [0, 1]` carries composite Gauss–Legendre panels graded
//! geometrically toward the endpoint.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::grid::{BoundaryField, Field};
use crate::special::gauss_legendre;

const POINTS_PER_PANEL: usize = 8;
const GRADING: f64 = 0.15;
const OVERFLOW_GUARD: f64 = 1e150;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TimeQuadRule {
    pub n_nodes: usize,
    /// exponents of `s^{-α₀}` and `(t-s)^{-α₁}`
    pub alpha0: f64,
    pub alpha1: f64,
}

/// One quadrature node; `s` and `t - s` are both kept to full relative precision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeNode {
    pub s: f64,
    pub rem: f64,
    pub weight: f64,
}

impl TimeQuadRule {
    pub fn new(n_nodes: usize, alpha0: f64, alpha1: f64) -> Result<Self> {
        for a in [alpha0, alpha1] {
            if !(0.0..1.0).contains(&a) {
                return domain(format!("endpoint exponent {a} outside [0, 1)"));
            }
        }
        if n_nodes < 2 * POINTS_PER_PANEL {
            return domain(format!("need at least {} time nodes", 2 * POINTS_PER_PANEL));
        }
        Ok(TimeQuadRule {
            n_nodes,
            alpha0,
            alpha1,
        })
    }

    /// Nodes for `∫_0^t`, ordered by increasing `s`.
    pub fn nodes(&self, t: f64) -> Vec<TimeNode> {
        let per_half = self.n_nodes / 2;
        let panels = per_half.div_ceil(POINTS_PER_PANEL).max(1);
        let (u, wu) = graded_unit_rule(panels);
        let mut left = Vec::with_capacity(u.len());
        let mut right = Vec::with_capacity(u.len());
        let q0 = power_for(self.alpha0);
        let q1 = power_for(self.alpha1);
        for (&ui, &wi) in u.iter().zip(&wu) {
            // left half: θ = (π/4) u^q0, s = t sin²θ
            let th = 0.25 * PI * ui.powf(q0);
            let dth = 0.25 * PI * q0 * ui.powf(q0 - 1.0) * wi;
            let (sn, cs) = th.sin_cos();
            left.push(TimeNode {
                s: t * sn * sn,
                rem: t * cs * cs,
                weight: t * 2.0 * sn * cs * dth,
            });
            // right half: π/2 - θ = (π/4) u^q1
            let ph = 0.25 * PI * ui.powf(q1);
            let dph = 0.25 * PI * q1 * ui.powf(q1 - 1.0) * wi;
            let (sn, cs) = ph.sin_cos();
            right.push(TimeNode {
                s: t * cs * cs,
                rem: t * sn * sn,
                weight: t * 2.0 * sn * cs * dph,
            });
        }
        right.reverse();
        left.extend(right);
        left
    }
}

// q so that θ^{1-2α} dθ becomes u^{q(2-2α)-1} du with a nonnegative integer exponent.
fn power_for(alpha: f64) -> f64 {
    let kappa = 2.0 - 2.0 * alpha;
    kappa.ceil() / kappa
}

// Composite Gauss–Legendre on [0, 1] with breakpoints 0, r^{P-1}, ..., r, 1.
fn graded_unit_rule(panels: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(POINTS_PER_PANEL);
    let mut br = vec![0.0];
    for p in (0..panels).rev() {
        br.push(GRADING.powi(p as i32));
    }
    let mut u = Vec::new();
    let mut wu = Vec::new();
    for k in 0..panels {
        let (a, b) = (br[k], br[k + 1]);
        for (xi, wi) in x.iter().zip(&w) {
            u.push(a + 0.5 * (b - a) * (xi + 1.0));
            wu.push(0.5 * (b - a) * wi);
        }
    }
    (u, wu)
}

/// Values that can be summed with weights.
pub trait Accumulate: Sized + Send {
    fn zero_like(&self) -> Self;
    fn axpy(&mut self, a: f64, x: &Self);
    fn max_abs(&self) -> f64;
}

impl Accumulate for f64 {
    fn zero_like(&self) -> Self {
        0.0
    }
    fn axpy(&mut self, a: f64, x: &Self) {
        *self += a * x;
    }
    fn max_abs(&self) -> f64 {
        self.abs()
    }
}

impl<T: Accumulate> Accumulate for Vec<T> {
    fn zero_like(&self) -> Self {
        self.iter().map(Accumulate::zero_like).collect()
    }
    fn axpy(&mut self, a: f64, x: &Self) {
        for (s, v) in self.iter_mut().zip(x) {
            s.axpy(a, v);
        }
    }
    fn max_abs(&self) -> f64 {
        self.iter().fold(0.0, |m, v| m.max(v.max_abs()))
    }
}

impl Accumulate for Field {
    fn zero_like(&self) -> Self {
        Field::zeros(&self.grid)
    }
    fn axpy(&mut self, a: f64, x: &Self) {
        Field::axpy(self, a, x)
    }
    fn max_abs(&self) -> f64 {
        self.sup()
    }
}

impl Accumulate for BoundaryField {
    fn zero_like(&self) -> Self {
        BoundaryField::zeros(&self.grid)
    }
    fn axpy(&mut self, a: f64, x: &Self) {
        BoundaryField::axpy(self, a, x)
    }
    fn max_abs(&self) -> f64 {
        self.sup()
    }
}

/// `∫_0^t f(s) ds`; the integrand receives `(s, t - s)`. Node evaluations may run
/// concurrently, the weighted sum is always taken in node order.
pub fn duhamel_integrate<T, F>(integrand: F, t: f64, rule: &TimeQuadRule) -> Result<T>
where
    T: Accumulate,
    F: Fn(f64, f64) -> Result<T> + Sync,
{
    if !(t > 0.0) {
        return domain(format!("integration length must be positive, got {t}"));
    }
    let nodes = rule.nodes(t);
    let values: Vec<Result<T>> = nodes.par_iter().map(|nd| integrand(nd.s, nd.rem)).collect();
    let mut acc: Option<T> = None;
    for (nd, v) in nodes.iter().zip(values) {
        let v = v?;
        let size = v.max_abs() * nd.weight;
        if !size.is_finite() || size > OVERFLOW_GUARD {
            return Err(Error::Numerical(format!(
                "integrand blow-up at s = {:e} (t - s = {:e}): |f| w = {size:e}; \
                 singularity stronger than declared exponents ({}, {})",
                nd.s, nd.rem, rule.alpha0, rule.alpha1
            )));
        }
        match acc.as_mut() {
            None => {
                let mut z = v.zero_like();
                z.axpy(nd.weight, &v);
                acc = Some(z);
            }
            Some(a) => a.axpy(nd.weight, &v),
        }
    }
    Ok(acc.expect("rule has nodes"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_length() {
        for (a0, a1) in [(0.5, 0.5), (0.25, 0.5), (0.5, 0.875), (0.0, 0.0)] {
            let r = TimeQuadRule::new(64, a0, a1).unwrap();
            let s: f64 = r.nodes(3.0).iter().map(|n| n.weight).sum();
            assert!((s - 3.0).abs() < 3e-7, "({a0},{a1}): {s}");
        }
    }

    #[test]
    fn nodes_are_ordered_and_complementary() {
        let r = TimeQuadRule::new(64, 0.5, 0.875).unwrap();
        let nodes = r.nodes(2.0);
        for w in nodes.windows(2) {
            assert!(w[0].s <= w[1].s);
        }
        for nd in nodes {
            assert!((nd.s + nd.rem - 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_nonintegrable_exponent() {
        assert!(TimeQuadRule::new(64, 1.0, 0.5).is_err());
        assert!(TimeQuadRule::new(4, 0.5, 0.5).is_err());
    }

    #[test]
    fn overflow_guard_trips_on_undeclared_singularity() {
        let r = TimeQuadRule::new(64, 0.0, 0.0).unwrap();
        let out = duhamel_integrate(|s, _| Ok(s.powf(-40.0)), 1.0, &r);
        assert!(matches!(out, Err(Error::Numerical(_))));
    }
}
