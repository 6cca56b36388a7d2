//! Translation-invariant lateral stencils on the uniform boundary lattice.
//!
//! Far field: the data are continued by their edge values, so a stencil is a
//! Toeplitz block for interior columns plus one aggregated weight per edge that
//! carries the kernel mass beyond the truncation box.

use std::f64::consts::PI;

use crate::error::{domain, Result};
use crate::grid::BoundaryField;
use crate::kernels::gamma1;
use crate::special::erf;

#[derive(Debug, Clone, PartialEq)]
pub struct LateralStencil {
    n: usize,
    /// weight for offset `d = i - j`, stored at `d + n - 1`
    interior: Vec<f64>,
    left_edge: Vec<f64>,
    right_edge: Vec<f64>,
}

impl LateralStencil {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn weight(&self, d: isize) -> f64 {
        self.interior[(d + self.n as isize - 1) as usize]
    }

    /// Mass attributed to the continuation beyond the left edge, as seen from node `i`.
    pub fn left_tail(&self, i: usize) -> f64 {
        self.left_edge[i] - self.weight(i as isize)
    }

    pub fn right_tail(&self, i: usize) -> f64 {
        self.right_edge[i] - self.weight(i as isize - (self.n as isize - 1))
    }

    /// Total absolute weight seen from node `i`.
    pub fn abs_mass(&self, i: usize) -> f64 {
        let n = self.n;
        let mut s = self.left_edge[i].abs() + self.right_edge[i].abs();
        for j in 1..n - 1 {
            s += self.weight(i as isize - j as isize).abs();
        }
        s
    }

    fn check_tails(&self, normalized: bool) -> Result<()> {
        if !normalized {
            return Ok(());
        }
        for i in 0..self.n {
            for t in [self.left_tail(i), self.right_tail(i)] {
                if !(-1e-12..=1.0 + 1e-12).contains(&t) {
                    return domain(format!("tail mass {t} outside [0, 1] at node {i}"));
                }
            }
        }
        Ok(())
    }

    /// `out[i] += a * (stencil * psi)[i]`
    pub fn apply_add(&self, a: f64, psi: &[f64], out: &mut [f64]) {
        let n = self.n;
        debug_assert_eq!(psi.len(), n);
        debug_assert_eq!(out.len(), n);
        let (p0, pn) = (psi[0], psi[n - 1]);
        let inner = &psi[1..n - 1];
        for (i, o) in out.iter_mut().enumerate() {
            // offsets i-1 down to i-(n-2)
            let start = i + 1;
            let w = &self.interior[start..start + n - 2];
            let mut acc = self.left_edge[i] * p0 + self.right_edge[i] * pn;
            // w[k] is the weight for column j = n-2-k
            let mut s = 0.0;
            for (wk, pk) in w.iter().rev().zip(inner) {
                s += wk * pk;
            }
            acc += s;
            *o += a * acc;
        }
    }

    pub fn apply(&self, psi: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.apply_add(1.0, psi, &mut out);
        out
    }

    fn from_parts(n: usize, interior: Vec<f64>, left_edge: Vec<f64>, right_edge: Vec<f64>) -> Self {
        LateralStencil {
            n,
            interior,
            left_edge,
            right_edge,
        }
    }

    /// Lattice trapezoid for an even kernel `k(z)`, with `tail(d)` the exact one-sided
    /// mass of `k` beyond distance `d`.
    pub fn from_kernel(
        kernel: impl Fn(f64) -> f64,
        tail: impl Fn(f64) -> f64,
        h: f64,
        n: usize,
        normalized: bool,
    ) -> Result<Self> {
        if n < 3 || !(h > 0.0) {
            return domain("stencil needs n >= 3 and h > 0");
        }
        let interior: Vec<f64> = (0..2 * n - 1)
            .map(|idx| h * kernel((idx as f64 - (n - 1) as f64) * h))
            .collect();
        let edge: Vec<f64> = (0..n)
            .map(|i| {
                let d = i as f64 * h;
                0.5 * h * kernel(d) + tail(d)
            })
            .collect();
        let right: Vec<f64> = (0..n).map(|i| edge[n - 1 - i]).collect();
        let mut s = Self::from_parts(n, interior, edge, right);
        s.check_tails(normalized)?;
        if normalized {
            s.renormalize_edges();
        }
        Ok(s)
    }

    // Push the lattice-sum defect of a unit-mass kernel into the two edge weights, in
    // proportion to their tail masses, so constants are reproduced to rounding.
    fn renormalize_edges(&mut self) {
        let n = self.n;
        for i in 0..n {
            let mut total = self.left_edge[i] + self.right_edge[i];
            for j in 1..n - 1 {
                total += self.weight(i as isize - j as isize);
            }
            let (lt, rt) = (self.left_tail(i).max(0.0), self.right_tail(i).max(0.0));
            let defect = 1.0 - total;
            if lt + rt > 0.0 {
                self.left_edge[i] += defect * lt / (lt + rt);
                self.right_edge[i] += defect * rt / (lt + rt);
            }
        }
    }

    /// Band-limited lattice version of `P(·, 0, σ)` for `N = 2`: the lattice symbol is
    /// `exp(-σ|ξ|)` on the Nyquist band, so weights are positive, sum to one, compose
    /// exactly in `σ`, and reduce to the identity at `σ = 0`.
    pub fn poisson(sigma: f64, h: f64, n: usize) -> Result<Self> {
        if !(sigma >= 0.0) || !(h > 0.0) || n < 3 {
            return domain("poisson stencil needs sigma >= 0, h > 0, n >= 3");
        }
        let w: Vec<f64> = (0..n).map(|k| poisson_weight(k, sigma, h)).collect();
        let s = Self::from_offsets(n, &w, 1.0);
        s.check_tails(true)?;
        Ok(s)
    }

    /// `σ`-derivative of [`LateralStencil::poisson`]; weights sum to zero.
    pub fn poisson_dt(sigma: f64, h: f64, n: usize) -> Result<Self> {
        if !(sigma >= 0.0) || !(h > 0.0) || n < 3 {
            return domain("poisson stencil needs sigma >= 0, h > 0, n >= 3");
        }
        let w: Vec<f64> = (0..n).map(|k| poisson_weight_dsigma(k, sigma, h)).collect();
        Ok(Self::from_offsets(n, &w, 0.0))
    }

    /// Gaussian `Γ₁(·, τ)` integrated exactly against the piecewise-linear interpolant
    /// of the data (edge-constant continuation outside the box).
    pub fn gaussian(tau: f64, h: f64, n: usize) -> Result<Self> {
        if !(tau > 0.0) || !(h > 0.0) || n < 3 {
            return domain("gaussian stencil needs tau > 0, h > 0, n >= 3");
        }
        let sq = 2.0 * tau.sqrt();
        // F'' = Γ₁(·, τ)
        let f = |y: f64| y * 0.5 * erf(y / sq) + 2.0 * tau * gamma1(y, tau);
        let fv: Vec<f64> = (0..=n).map(|k| f(k as f64 * h)).collect();
        // hat at offset d: second difference of F around d h (F is even)
        let hat = |d: usize| -> f64 {
            let fm = if d == 0 { fv[1] } else { fv[d - 1] };
            (fv[d + 1] - 2.0 * fv[d] + fm) / h
        };
        let half: Vec<f64> = (0..n).map(hat).collect();
        let interior: Vec<f64> = (0..2 * n - 1)
            .map(|idx| half[(idx as isize - (n - 1) as isize).unsigned_abs()])
            .collect();
        let edge: Vec<f64> = (0..n).map(|i| gaussian_edge(i, h, tau)).collect();
        let right: Vec<f64> = (0..n).map(|i| edge[n - 1 - i]).collect();
        let s = Self::from_parts(n, interior, edge, right);
        s.check_tails(true)?;
        Ok(s)
    }

    // Build a symmetric stencil from one-sided offset weights `w[k]`, `k >= 0`, whose
    // two-sided lattice sum is `total`.
    fn from_offsets(n: usize, w: &[f64], total: f64) -> Self {
        let interior: Vec<f64> = (0..2 * n - 1)
            .map(|idx| w[(idx as isize - (n - 1) as isize).unsigned_abs()])
            .collect();
        // S[m] = sum_{k >= m} w_k over the infinite lattice
        let mut tail = vec![0.0; n];
        tail[0] = 0.5 * (total + w[0]);
        let mut acc = 0.5 * (total - w[0]);
        for (m, t) in tail.iter_mut().enumerate().skip(1) {
            *t = acc;
            acc -= w[m];
        }
        let right: Vec<f64> = (0..n).map(|i| tail[n - 1 - i]).collect();
        Self::from_parts(n, interior, tail, right)
    }
}

// Left edge weight seen from node i (distance i h to the edge): the falling half-hat
// on [x0, x1] plus the Gaussian mass beyond x0.
fn gaussian_edge(i: usize, h: f64, tau: f64) -> f64 {
    let sq = 2.0 * tau.sqrt();
    let d0 = i as f64 * h; // distance from target to x0
    let d1 = d0 - h; // signed distance to x1 (target side positive)
    // work with z = target - y, y in [x0, x1] -> z in [d1, d0]
    let tail = 0.5 * crate::special::erfc(d0 / sq);
    // ∫_{x0}^{x1} (x1 - y)/h Γ₁(target - y) dy = ∫_{d1}^{d0} (z - d1)/h Γ₁(z) dz
    let i0 = 0.5 * (erf(d0 / sq) - erf(d1 / sq));
    let i1 = 2.0 * tau * (gamma1(d1, tau) - gamma1(d0, tau));
    tail + (i1 - d1 * i0) / h
}

fn poisson_weight(k: usize, sigma: f64, h: f64) -> f64 {
    let a = PI * sigma / h;
    let kh = k as f64 * h;
    if k == 0 {
        if sigma == 0.0 {
            return 1.0;
        }
        return (h / PI) * (-(-a).exp_m1()) / sigma;
    }
    let alias = if k % 2 == 0 { -(-a).exp_m1() } else { 1.0 + (-a).exp() };
    (h / PI) * alias * sigma / (sigma * sigma + kh * kh)
}

fn poisson_weight_dsigma(k: usize, sigma: f64, h: f64) -> f64 {
    let a = PI * sigma / h;
    let kh = k as f64 * h;
    if k == 0 {
        // (π/h) [e^{-a}(1+a) - 1] / a²
        let f = if a < 0.5 {
            let mut s = 0.0;
            let mut term = 1.0; // a^{n-2} / n!
            let mut fact = 2.0;
            term /= fact;
            for n in 2..30 {
                let nf = n as f64;
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                s += sign * (1.0 - nf) * term;
                fact = nf + 1.0;
                term *= a / fact;
            }
            s
        } else {
            ((-a).exp() * (1.0 + a) - 1.0) / (a * a)
        };
        return (PI / h) * f;
    }
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    let e = (-a).exp();
    let alias = if k % 2 == 0 { -(-a).exp_m1() } else { 1.0 + e };
    let den = sigma * sigma + kh * kh;
    (h / PI) * (alias * (kh * kh - sigma * sigma) / (den * den) + sign * (PI / h) * e * sigma / den)
}

/// Lattice convolution of a boundary field with a stencil.
pub fn convolve_boundary(stencil: &LateralStencil, psi: &BoundaryField) -> Result<BoundaryField> {
    if stencil.len() != psi.values.len() {
        return domain("stencil and boundary field sizes differ");
    }
    BoundaryField::new(psi.grid.clone(), stencil.apply(&psi.values))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poisson_sums_to_one_and_is_identity_at_zero() {
        let s = LateralStencil::poisson(0.0, 0.1, 11).unwrap();
        let psi: Vec<f64> = (0..11).map(|i| (i as f64).sin()).collect();
        let out = s.apply(&psi);
        for (a, b) in out.iter().zip(&psi) {
            assert!((a - b).abs() < 1e-15);
        }
        let s = LateralStencil::poisson(0.7, 0.1, 41).unwrap();
        let one = s.apply(&vec![1.0; 41]);
        assert!(one.iter().all(|v| (v - 1.0).abs() < 1e-14));
    }

    #[test]
    fn derivative_series_matches_closed_form() {
        for a in [0.3, 0.49, 0.51, 0.8] {
            let h = 0.1;
            let sigma = a * h / PI;
            let v = poisson_weight_dsigma(0, sigma, h);
            let e = (-a).exp();
            let closed = (PI / h) * (e * (1.0 + a) - 1.0) / (a * a);
            assert!((v - closed).abs() < 1e-10 * closed.abs(), "{a}: {v} vs {closed}");
        }
    }

    #[test]
    fn derivative_matches_difference_quotient() {
        let (h, sigma, d) = (0.2, 0.37, 1e-5);
        for k in 0..6 {
            let fd = (poisson_weight(k, sigma + d, h) - poisson_weight(k, sigma - d, h)) / (2.0 * d);
            let an = poisson_weight_dsigma(k, sigma, h);
            assert!((fd - an).abs() < 1e-7, "k={k}: {fd} vs {an}");
        }
    }

    #[test]
    fn gaussian_reproduces_constants_and_linear_data() {
        let n = 61;
        let h = 0.1;
        let s = LateralStencil::gaussian(0.05, h, n).unwrap();
        let one = s.apply(&vec![1.0; n]);
        assert!(one.iter().all(|v| (v - 1.0).abs() < 1e-13));
        let lin: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
        let out = s.apply(&lin);
        // away from the edges a Gaussian maps linear data to itself
        for i in 26..35 {
            assert!((out[i] - lin[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn trapezoid_rejects_bad_tail() {
        let r = LateralStencil::from_kernel(|_| 0.0, |_| 2.0, 0.1, 5, true);
        assert!(r.is_err());
    }
}
