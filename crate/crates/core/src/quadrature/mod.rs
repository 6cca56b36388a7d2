//! Spatial convolution quadrature and weakly singular time quadrature.

mod depth;
mod lateral;
mod time;

pub use depth::DepthOp;
pub use lateral::{convolve_boundary, LateralStencil};
pub use time::{duhamel_integrate, Accumulate, TimeNode, TimeQuadRule};

use crate::error::{domain, Result};
use crate::grid::Field;

/// Kernel on the half-space with an optional analytic lateral tail.
pub trait HalfSpaceKernel: Sync {
    fn eval(&self, x_prime: f64, x_n: f64, y_prime: f64, y_n: f64) -> f64;

    /// `∫_{y' beyond the box, distance > d} kernel dy'` at depth `y_n` (one side).
    fn lateral_tail(&self, _x_n: f64, _y_n: f64, _d: f64) -> f64 {
        0.0
    }

    /// `∫_L^∞ kernel dy_N` at lateral position `y'`; pairs with the last depth row.
    fn depth_tail(&self, _x_prime: f64, _x_n: f64, _y_prime: f64, _l: f64) -> f64 {
        0.0
    }
}

/// Direct product-trapezoid convolution over the truncated grid, `O(n⁴)`. The far
/// field is the edge-value continuation, weighted by the kernel's lateral and depth
/// tails (the corner beyond both is dropped).
/// Used to cross-check the separable fast paths.
pub fn convolve_halfspace(kernel: &impl HalfSpaceKernel, phi: &Field) -> Result<Field> {
    let g = phi.grid.clone();
    if g.n_depth < 2 {
        return domain("grid too small");
    }
    let depth = g.depth();
    let lat = g.lateral();
    let h = g.lateral_spacing();
    let nd = g.n_depth;
    let np = g.n_prime;
    let mut wd = vec![0.0; nd];
    for k in 0..nd - 1 {
        let dy = depth[k + 1] - depth[k];
        wd[k] += 0.5 * dy;
        wd[k + 1] += 0.5 * dy;
    }
    let mut out = Field::zeros(&g);
    for m in 0..nd {
        for i in 0..np {
            let (x, xn) = (lat[i], depth[m]);
            let mut acc = 0.0;
            for k in 0..nd {
                let yn = depth[k];
                let row = phi.row(k);
                let mut s = 0.0;
                for j in 0..np {
                    let wl = if j == 0 || j == np - 1 { 0.5 * h } else { h };
                    s += wl * kernel.eval(x, xn, lat[j], yn) * row[j];
                }
                s += kernel.lateral_tail(xn, yn, x - lat[0]) * row[0];
                s += kernel.lateral_tail(xn, yn, lat[np - 1] - x) * row[np - 1];
                acc += wd[k] * s;
            }
            let last = phi.row(nd - 1);
            for j in 0..np {
                let wl = if j == 0 || j == np - 1 { 0.5 * h } else { h };
                acc += wl * kernel.depth_tail(x, xn, lat[j], g.l) * last[j];
            }
            out.values[g.index(i, m)] = acc;
        }
    }
    Ok(out)
}
