//! `S₁(τ)` (Dirichlet heat semigroup), its normal derivative, and `S₂(t)` (the
//! dynamical-boundary Poisson evolution).

use std::sync::Arc;

use crate::error::{domain, Result};
use crate::grid::{BoundaryField, Field, HalfSpaceGrid};
use crate::quadrature::{DepthOp, LateralStencil};

/// Piecewise-constant-in-depth data: one value per depth cell and lateral node,
/// `values[j * n' + i]` on `[y_j, y_{j+1}]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CellField {
    pub grid: Arc<HalfSpaceGrid>,
    pub values: Vec<f64>,
}

impl CellField {
    pub fn zeros(grid: &Arc<HalfSpaceGrid>) -> Self {
        CellField {
            grid: grid.clone(),
            values: vec![0.0; (grid.n_depth - 1) * grid.n_prime],
        }
    }

    /// Cell slopes `(f_{j+1} - f_j) / (y_{j+1} - y_j)`.
    pub fn depth_slopes(f: &Field) -> Self {
        let g = &f.grid;
        let n = g.n_prime;
        let y = g.depth();
        let mut values = Vec::with_capacity((g.n_depth - 1) * n);
        for j in 0..g.n_depth - 1 {
            let inv = 1.0 / (y[j + 1] - y[j]);
            let (a, b) = (f.row(j), f.row(j + 1));
            values.extend(a.iter().zip(b).map(|(a, b)| (b - a) * inv));
        }
        CellField {
            grid: g.clone(),
            values,
        }
    }

    pub fn row(&self, j: usize) -> &[f64] {
        let n = self.grid.n_prime;
        &self.values[j * n..(j + 1) * n]
    }

    pub fn axpy(&mut self, a: f64, x: &CellField) {
        for (s, v) in self.values.iter_mut().zip(&x.values) {
            *s += a * v;
        }
    }
}

/// `S₁(τ)` on a grid: lateral Gaussian against the hat interpolant, exact depth
/// product integration.
#[derive(Debug, Clone)]
pub struct S1Op {
    pub grid: Arc<HalfSpaceGrid>,
    pub tau: f64,
    lateral: LateralStencil,
    depth: DepthOp,
}

/// Which outputs an [`S1Op`] application should produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum S1Output {
    Value,
    Derivative,
    Both,
}

impl S1Op {
    pub fn new(grid: &Arc<HalfSpaceGrid>, tau: f64) -> Result<Self> {
        if !(tau > 0.0) {
            return domain(format!("diffusion time must be positive, got {tau}"));
        }
        Ok(S1Op {
            grid: grid.clone(),
            tau,
            lateral: LateralStencil::gaussian(tau, grid.lateral_spacing(), grid.n_prime)?,
            depth: DepthOp::new(grid.depth(), tau),
        })
    }

    /// Apply to `nodal + cell` data; returns `(S₁ f, ∂_{x_N} S₁ f)` as requested.
    pub fn apply_mixed(
        &self,
        nodal: Option<&Field>,
        cell: Option<&CellField>,
        which: S1Output,
    ) -> (Option<Field>, Option<Field>) {
        let g = &self.grid;
        let n = g.n_prime;
        let nd = g.n_depth;
        let lat_nodal: Option<Vec<f64>> = nodal.map(|f| {
            let mut out = vec![0.0; nd * n];
            for k in 0..nd {
                self.lateral.apply_add(1.0, f.row(k), &mut out[k * n..(k + 1) * n]);
            }
            out
        });
        let lat_cell: Option<Vec<f64>> = cell.map(|f| {
            let mut out = vec![0.0; (nd - 1) * n];
            for j in 0..nd - 1 {
                self.lateral.apply_add(1.0, f.row(j), &mut out[j * n..(j + 1) * n]);
            }
            out
        });
        let contract = |wn: &[f64], wc: &[f64], skip_row0: bool| -> Field {
            let mut out = Field::zeros(g);
            for m in 0..nd {
                if skip_row0 && m == 0 {
                    continue;
                }
                let row = &mut out.values[m * n..(m + 1) * n];
                if let Some(ln) = &lat_nodal {
                    for k in 0..nd {
                        let w = wn[m * nd + k];
                        if w != 0.0 {
                            axpy_row(row, w, &ln[k * n..(k + 1) * n]);
                        }
                    }
                }
                if let Some(lc) = &lat_cell {
                    for j in 0..nd - 1 {
                        let w = wc[m * (nd - 1) + j];
                        if w != 0.0 {
                            axpy_row(row, w, &lc[j * n..(j + 1) * n]);
                        }
                    }
                }
            }
            out
        };
        let val = matches!(which, S1Output::Value | S1Output::Both)
            .then(|| contract(&self.depth.val_nodal, &self.depth.val_cell, true));
        let der = matches!(which, S1Output::Derivative | S1Output::Both)
            .then(|| contract(&self.depth.der_nodal, &self.depth.der_cell, false));
        (val, der)
    }
}

#[inline]
fn axpy_row(row: &mut [f64], w: f64, x: &[f64]) {
    for (r, v) in row.iter_mut().zip(x) {
        *r += w * v;
    }
}

/// Boundary-row-only `∂_{x_N} S₁(τ)`: cheap path for trace targets.
#[derive(Debug, Clone)]
pub struct S1BoundaryDxn {
    lateral: LateralStencil,
    nodal: Vec<f64>,
    cell: Vec<f64>,
    n: usize,
}

impl S1BoundaryDxn {
    pub fn new(grid: &Arc<HalfSpaceGrid>, tau: f64) -> Result<Self> {
        if !(tau > 0.0) {
            return domain(format!("diffusion time must be positive, got {tau}"));
        }
        let (nodal, cell) = DepthOp::boundary_derivative_row(grid.depth(), tau);
        Ok(S1BoundaryDxn {
            lateral: LateralStencil::gaussian(tau, grid.lateral_spacing(), grid.n_prime)?,
            nodal,
            cell,
            n: grid.n_prime,
        })
    }

    /// Depth contraction first, then one lateral convolution.
    pub fn apply(&self, nodal: Option<&Field>, cell: Option<&CellField>) -> Vec<f64> {
        let mut col = vec![0.0; self.n];
        if let Some(f) = nodal {
            for (k, &w) in self.nodal.iter().enumerate() {
                axpy_row(&mut col, w, f.row(k));
            }
        }
        if let Some(c) = cell {
            for (j, &w) in self.cell.iter().enumerate() {
                axpy_row(&mut col, w, c.row(j));
            }
        }
        self.lateral.apply(&col)
    }
}

pub fn s1_apply(op: &S1Op, phi: &Field) -> Result<Field> {
    phi_grid_check(op, phi)?;
    Ok(op.apply_mixed(Some(phi), None, S1Output::Value).0.unwrap())
}

pub fn s1_apply_dxn(op: &S1Op, phi: &Field) -> Result<Field> {
    phi_grid_check(op, phi)?;
    Ok(op.apply_mixed(Some(phi), None, S1Output::Derivative).1.unwrap())
}

fn phi_grid_check(op: &S1Op, phi: &Field) -> Result<()> {
    if *op.grid != *phi.grid {
        return domain("operator and field grids differ");
    }
    Ok(())
}

/// `S₂(t)`: row `m` is the boundary convolution with `P(·, 0, y_m + t)`.
#[derive(Debug, Clone)]
pub struct S2Op {
    pub grid: Arc<HalfSpaceGrid>,
    pub t: f64,
    rows: Vec<LateralStencil>,
}

impl S2Op {
    pub fn new(grid: &Arc<HalfSpaceGrid>, t: f64) -> Result<Self> {
        if !(t >= 0.0) {
            return domain(format!("evolution time must be nonnegative, got {t}"));
        }
        let h = grid.lateral_spacing();
        let rows = grid
            .depth()
            .iter()
            .map(|&y| LateralStencil::poisson(y + t, h, grid.n_prime))
            .collect::<Result<Vec<_>>>()?;
        Ok(S2Op {
            grid: grid.clone(),
            t,
            rows,
        })
    }

    pub fn apply(&self, psi: &[f64]) -> Field {
        let g = &self.grid;
        let n = g.n_prime;
        let mut out = Field::zeros(g);
        for (m, st) in self.rows.iter().enumerate() {
            st.apply_add(1.0, psi, &mut out.values[m * n..(m + 1) * n]);
        }
        out
    }
}

pub fn s2_apply(op: &S2Op, psi: &BoundaryField) -> Result<Field> {
    if *op.grid != *psi.grid {
        return domain("operator and field grids differ");
    }
    Ok(op.apply(&psi.values))
}

/// `N = 3` evaluation of `S₂(t)` for radially symmetric boundary data.
pub mod radial {
    use std::f64::consts::PI;

    use crate::error::{domain, Result};
    use crate::kernels::normalization_constant;
    use crate::special::gauss_legendre;

    /// `[S₂(t)ψ](x', x_N)` with `|x'| = r`, `ψ` a radial profile. Uses `ρ = σ tan φ`
    /// about the target, which turns the kernel mass into `c₃ sin φ dφ dθ`.
    pub fn s2_apply_radial(
        psi: &dyn Fn(f64) -> f64,
        r: f64,
        x_n: f64,
        t: f64,
        n_phi: usize,
        n_theta: usize,
    ) -> Result<f64> {
        let sigma = x_n + t;
        if !(sigma > 0.0) || !(r >= 0.0) {
            return domain("radial S2 needs x_N + t > 0 and r >= 0");
        }
        let c3 = normalization_constant(3)?;
        let (x, w) = gauss_legendre(n_phi);
        // graded panels toward φ = π/2 where ρ → ∞
        let breaks = [0.0, 0.5 * PI * 0.5, 0.5 * PI * 0.8, 0.5 * PI * 0.95, 0.5 * PI * 0.99, 0.5 * PI];
        let mut acc = 0.0;
        for p in breaks.windows(2) {
            let (a, b) = (p[0], p[1]);
            for (xi, wi) in x.iter().zip(&w) {
                let phi = a + 0.5 * (b - a) * (xi + 1.0);
                let rho = sigma * phi.tan();
                let mut ring = 0.0;
                for q in 0..n_theta {
                    let th = 2.0 * PI * q as f64 / n_theta as f64;
                    let d = (r * r + rho * rho + 2.0 * r * rho * th.cos()).max(0.0).sqrt();
                    ring += psi(d);
                }
                ring *= 2.0 * PI / n_theta as f64;
                acc += 0.5 * (b - a) * wi * phi.sin() * ring;
            }
        }
        Ok(c3 * acc)
    }
}
