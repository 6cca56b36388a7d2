//! Verification suites, the ε-sweep with rate fits, and the finite-difference comparison.

mod compare;
mod lemmas;
mod sweep;

pub use compare::{oracle_compare, CompareLevel, CompareReport};
pub use lemmas::{contraction_check, run_lemma_suite, LemmaEntry, LemmaReport};
pub use sweep::{run_sweep, Functional, FunctionalReport, FunctionalStatus, PointResult, RateReport, SweepPlan};

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{BoundaryField, Field, HalfSpaceGrid};

/// Least-squares line through `(log₁₀ ε, log₁₀ value)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
    /// RMS of the log₁₀ residuals
    pub residual: f64,
    pub used: usize,
}

/// Fit `value ≈ 10^intercept · ε^slope`. Nonpositive or non-finite values are skipped;
/// fewer than three remaining points is an error.
pub fn fit_rate(points: &[(f64, f64)]) -> Result<Fit> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(e, v)| *e > 0.0 && *v > 0.0 && v.is_finite())
        .map(|(e, v)| (e.log10(), v.log10()))
        .collect();
    let skipped = points.len() - logs.len();
    if logs.len() < 3 {
        return Err(Error::Fit(format!(
            "{} usable points ({skipped} nonpositive), need at least 3",
            logs.len()
        )));
    }
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("all ε values coincide".into()));
    }
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = logs.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    Ok(Fit {
        slope,
        intercept,
        residual: (ss / n).sqrt(),
        used: logs.len(),
    })
}

/// Smooth random data in closed form, so the same function can be sampled on several grids.
#[derive(Debug, Clone)]
pub(crate) struct SmoothData {
    c: f64,
    bumps: Vec<(f64, f64, f64, f64)>,
    cauchy: (f64, f64),
}

impl SmoothData {
    pub(crate) fn random(rng: &mut ChaCha8Rng) -> Self {
        let c = rng.gen_range(-1.0..1.0);
        let bumps = (0..3)
            .map(|_| {
                (
                    rng.gen_range(-2.0..2.0),
                    rng.gen_range(-4.0..4.0),
                    rng.gen_range(0.0..3.0),
                    rng.gen_range(0.3..2.0),
                )
            })
            .collect();
        let cauchy = (rng.gen_range(-2.0..2.0), rng.gen_range(-3.0..3.0));
        SmoothData { c, bumps, cauchy }
    }

    fn eval(&self, x: f64, y: f64) -> f64 {
        let (b, d) = self.cauchy;
        self.c
            + b / (1.0 + (x - d).powi(2) + y * y)
            + self
                .bumps
                .iter()
                .map(|(a, x0, y0, w)| a * (-((x - x0).powi(2) + (y - y0).powi(2)) / (w * w)).exp())
                .sum::<f64>()
    }

    pub(crate) fn field(&self, g: &Arc<HalfSpaceGrid>) -> Result<Field> {
        Field::from_fn(g, |x, y| self.eval(x, y))
    }

    /// Boundary data uses the `x_N = 0` slice with the bump centres on the boundary.
    pub(crate) fn boundary(&self, g: &Arc<HalfSpaceGrid>) -> Result<BoundaryField> {
        let flat = SmoothData {
            bumps: self.bumps.iter().map(|&(a, x0, _, w)| (a, x0, 0.0, w)).collect(),
            ..self.clone()
        };
        BoundaryField::from_fn(g, |x| flat.eval(x, 0.0))
    }
}

/// `‖a - b‖` over nodes with `|x'| ≤ k_lateral` and `x_N ≤ k_depth`.
pub fn compact_gap(a: &Field, b: &Field, k_lateral: f64, k_depth: f64) -> f64 {
    let g = &a.grid;
    let mut m = 0.0f64;
    for k in 0..g.n_depth {
        for i in 0..g.n_prime {
            let (x, y) = g.coords(i, k);
            if x.abs() <= k_lateral * (1.0 + 1e-12) && y <= k_depth * (1.0 + 1e-12) {
                m = m.max((a.at(i, k) - b.at(i, k)).abs());
            }
        }
    }
    m
}

/// Fixed-width scientific notation used by every report.
pub(crate) fn sci(x: f64) -> String {
    format!("{x:.9e}")
}
