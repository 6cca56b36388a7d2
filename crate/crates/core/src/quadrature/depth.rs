//! Exact product integration of the depth factor of the Dirichlet heat kernel
//! (and of its `x_N`-derivative) against piecewise-linear or piecewise-constant data.

use crate::kernels::gamma1;
use crate::special::{erf, erfc};

/// Depth weights at diffusion time `τ` on a fixed node list.
///
/// `val_nodal[m][k]`: weight of node value `f_k` in `∫ (Γ₁(y_m - y) - Γ₁(y_m + y)) f(y) dy`
/// for the hat interpolant continued by `f_{n-1}` beyond `L`. `val_cell[m][j]`: weight of
/// a constant on cell `[y_j, y_{j+1}]` (zero beyond `L`). `der_*` are the `x_N`-derivatives.
#[derive(Debug, Clone)]
pub struct DepthOp {
    pub n: usize,
    pub tau: f64,
    pub val_nodal: Vec<f64>,
    pub der_nodal: Vec<f64>,
    pub val_cell: Vec<f64>,
    pub der_cell: Vec<f64>,
}

/// Weights of one target row, split by center sign.
struct RowWeights {
    nodal: Vec<f64>,
    dnodal: Vec<f64>,
    cell: Vec<f64>,
    dcell: Vec<f64>,
}

fn center_weights(depth: &[f64], c: f64, tau: f64) -> RowWeights {
    let n = depth.len();
    let sq = 2.0 * tau.sqrt();
    let e: Vec<f64> = depth.iter().map(|&y| erf((y - c) / sq)).collect();
    let g: Vec<f64> = depth.iter().map(|&y| gamma1(y - c, tau)).collect();
    let mut nodal = vec![0.0; n];
    let mut dnodal = vec![0.0; n];
    let mut cell = vec![0.0; n - 1];
    let mut dcell = vec![0.0; n - 1];
    for j in 0..n - 1 {
        let (a, b) = (depth[j], depth[j + 1]);
        let h = b - a;
        // erf differences lose relative accuracy in the far tail; use erfc there
        let i0 = if (a - c) / sq > 3.0 {
            0.5 * (erfc((a - c) / sq) - erfc((b - c) / sq))
        } else if (b - c) / sq < -3.0 {
            0.5 * (erfc((c - b) / sq) - erfc((c - a) / sq))
        } else {
            0.5 * (e[j + 1] - e[j])
        };
        let i1 = 2.0 * tau * (g[j] - g[j + 1]);
        let di0 = g[j] - g[j + 1];
        let di1 = (a - c) * g[j] - (b - c) * g[j + 1];
        cell[j] = i0;
        dcell[j] = di0;
        nodal[j] += ((b - c) * i0 - i1) / h;
        nodal[j + 1] += (i1 - (a - c) * i0) / h;
        dnodal[j] += ((b - c) * di0 - i0 - di1) / h;
        dnodal[j + 1] += (di1 + i0 - (a - c) * di0) / h;
    }
    let l = depth[n - 1];
    nodal[n - 1] += 0.5 * erfc((l - c) / sq);
    dnodal[n - 1] += gamma1(l - c, tau);
    RowWeights {
        nodal,
        dnodal,
        cell,
        dcell,
    }
}

impl DepthOp {
    pub fn new(depth: &[f64], tau: f64) -> Self {
        let n = depth.len();
        let mut op = DepthOp {
            n,
            tau,
            val_nodal: vec![0.0; n * n],
            der_nodal: vec![0.0; n * n],
            val_cell: vec![0.0; n * (n - 1)],
            der_cell: vec![0.0; n * (n - 1)],
        };
        for m in 0..n {
            let x = depth[m];
            let p = center_weights(depth, x, tau);
            let q = center_weights(depth, -x, tau);
            for k in 0..n {
                op.val_nodal[m * n + k] = if m == 0 { 0.0 } else { p.nodal[k] - q.nodal[k] };
                op.der_nodal[m * n + k] = p.dnodal[k] + q.dnodal[k];
            }
            for j in 0..n - 1 {
                op.val_cell[m * (n - 1) + j] = if m == 0 { 0.0 } else { p.cell[j] - q.cell[j] };
                op.der_cell[m * (n - 1) + j] = p.dcell[j] + q.dcell[j];
            }
        }
        op
    }

    /// Only the `x_N = 0` derivative row: `(nodal, cell)`.
    pub fn boundary_derivative_row(depth: &[f64], tau: f64) -> (Vec<f64>, Vec<f64>) {
        let p = center_weights(depth, 0.0, tau);
        (
            p.dnodal.iter().map(|v| 2.0 * v).collect(),
            p.dcell.iter().map(|v| 2.0 * v).collect(),
        )
    }
}
