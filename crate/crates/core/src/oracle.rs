//! Independent reference solvers: a finite-difference solver for the full problem and the
//! limit solution `S₂(t) φ_b`.
//!
//! The finite-difference solver works on a uniform grid with homogeneous Neumann
//! conditions at `|x'| = R'` and `x_N = L`. Laterally the Neumann second difference is
//! diagonalized by the DCT-I, so each cosine mode is a 1-D backward-Euler problem in depth:
//!
//! * interior: `ε (u_j - u_jⁿ)/dt = (u_{j-1} - 2u_j + u_{j+1})/h² + λ_k u_j`
//! * boundary: `(u_0 - u_0ⁿ)/dt = (-3u_0 + 4u_1 - u_2)/(2h)`, i.e. `∂_t u = ∂_{x_N} u`
//!
//! The boundary row is reduced to two unknowns with the `j = 1` row, so each step is one
//! tridiagonal solve per mode.

use std::f64::consts::PI;
use std::sync::Arc;

use log::{info, warn};
use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::grid::{BoundaryField, Field, HalfSpaceGrid};
use crate::semigroups::S2Op;

#[derive(Debug, Clone)]
pub struct FDConfig {
    /// uniform in depth
    pub grid: Arc<HalfSpaceGrid>,
    /// largest time step; steps are shortened to land on the output times
    pub dt: f64,
}

impl FDConfig {
    pub fn new(grid: Arc<HalfSpaceGrid>, dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return domain("fd: dt must be positive");
        }
        let d = grid.depth();
        let h = d[1] - d[0];
        if d.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h) {
            return domain("fd: depth spacing must be uniform");
        }
        if grid.dim.get() != 2 {
            return domain("fd: only N = 2 is implemented");
        }
        Ok(FDConfig { grid, dt })
    }

    pub fn depth_spacing(&self) -> f64 {
        self.grid.depth()[1] - self.grid.depth()[0]
    }

    /// `ε⁻¹ dt / Δx²` with the smaller of the two spacings.
    pub fn diffusion_number(&self, eps: f64) -> f64 {
        let h = self.depth_spacing().min(self.grid.lateral_spacing());
        self.dt / (eps * h * h)
    }
}

/// Cosine transform pair for the Neumann lattice `0..n`.
struct Dct1 {
    n: usize,
    cos: Vec<f64>,
}

impl Dct1 {
    fn new(n: usize) -> Self {
        let m = (n - 1) as f64;
        let cos = (0..n * n)
            .map(|ki| {
                let (k, i) = (ki / n, ki % n);
                // exact reduction of k i mod 2(n-1) keeps the table symmetric to the last bit
                let r = (k * i) % (2 * (n - 1));
                (PI * r as f64 / m).cos()
            })
            .collect();
        Dct1 { n, cos }
    }

    fn end_weight(&self, i: usize) -> f64 {
        if i == 0 || i == self.n - 1 {
            0.5
        } else {
            1.0
        }
    }

    fn forward(&self, u: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|k| {
                let row = &self.cos[k * self.n..(k + 1) * self.n];
                (0..self.n).map(|i| self.end_weight(i) * row[i] * u[i]).sum()
            })
            .collect()
    }

    fn inverse(&self, a: &[f64]) -> Vec<f64> {
        let scale = 2.0 / (self.n - 1) as f64;
        (0..self.n)
            .map(|i| {
                scale
                    * (0..self.n)
                        .map(|k| self.end_weight(k) * self.cos[k * self.n + i] * a[k])
                        .sum::<f64>()
            })
            .collect()
    }

    fn eigenvalue(&self, k: usize, h: f64) -> f64 {
        let s = (PI * k as f64 / (2.0 * (self.n - 1) as f64)).sin();
        -4.0 * s * s / (h * h)
    }
}

// One backward-Euler step for one mode; `col` is overwritten.
fn step_mode(col: &mut [f64], eps: f64, dt: f64, h: f64, lambda: f64, scratch: &mut [f64]) -> Result<()> {
    let m = col.len() - 1;
    let a = h * h * (eps / dt - lambda);
    let r0 = 2.0 * h * col[0] / dt + h * h * eps * col[1] / dt;
    // rows: b_j u_j + lower_j u_{j-1} + upper_j u_{j+1} = r_j
    let (b0, c0) = (2.0 * h / dt + 2.0, a - 2.0);
    let diag = 2.0 + a;
    // Thomas sweep, scratch holds modified upper coefficients
    let mut denom = b0;
    scratch[0] = c0 / denom;
    let mut prev = r0 / denom;
    let rhs_scale = h * h * eps / dt;
    let mut rhs = vec![0.0; m + 1];
    rhs[0] = prev;
    for j in 1..=m {
        let lower = if j == m { -2.0 } else { -1.0 };
        let upper = if j == m { 0.0 } else { -1.0 };
        denom = diag - lower * scratch[j - 1];
        if denom.abs() < 1e-300 {
            return Err(Error::Numerical(format!("fd: singular tridiagonal row {j}")));
        }
        scratch[j] = upper / denom;
        prev = (rhs_scale * col[j] - lower * prev) / denom;
        rhs[j] = prev;
    }
    col[m] = rhs[m];
    for j in (0..m).rev() {
        col[j] = rhs[j] - scratch[j] * col[j + 1];
    }
    Ok(())
}

/// March `ε ∂_t u = Δu`, `∂_t u = ∂_{x_N} u` on the boundary from `(φ, φ_b)` and return `u`
/// at the requested times (sorted, positive).
pub fn fd_solve(phi: &Field, phi_b: &BoundaryField, eps: f64, cfg: &FDConfig, times: &[f64]) -> Result<Vec<(f64, Field)>> {
    let g = &cfg.grid;
    if *phi.grid != **g || *phi_b.grid != **g {
        return domain("fd: data grid differs from the solver grid");
    }
    if !(eps > 0.0) {
        return domain("fd: eps must be positive");
    }
    if times.iter().any(|&t| !(t > 0.0)) || times.windows(2).any(|w| w[1] <= w[0]) {
        return domain("fd: output times must be positive and increasing");
    }
    let t_max = times.last().copied().unwrap_or(0.0);
    let reach = 4.0 * (t_max / eps).sqrt();
    let l = *g.depth().last().unwrap();
    if l < reach {
        warn!("fd: depth L = {l} is inside the pollution radius {reach:.3} of the Neumann far boundary");
    }
    info!("fd: diffusion number {:.3e}", cfg.diffusion_number(eps));
    let (n, nd) = (g.n_prime, g.n_depth);
    let h = cfg.depth_spacing();
    let dct = Dct1::new(n);
    // depth columns of the lateral transform, one per mode
    let mut rows: Vec<Vec<f64>> = (0..nd).map(|k| phi.row(k).to_vec()).collect();
    rows[0] = phi_b.values.clone();
    let modes_by_row: Vec<Vec<f64>> = rows.iter().map(|r| dct.forward(r)).collect();
    let cols: Vec<Vec<f64>> = (0..n).map(|k| (0..nd).map(|j| modes_by_row[j][k]).collect()).collect();
    // per mode: columns at each output time
    let outputs = cols
        .into_par_iter()
        .enumerate()
        .map(|(k, mut col)| {
            let lambda = dct.eigenvalue(k, cfg.grid.lateral_spacing());
            let mut scratch = vec![0.0; nd];
            let mut t = 0.0;
            let mut out = Vec::with_capacity(times.len());
            for (idx, &target) in times.iter().enumerate() {
                let steps = ((target - t) / cfg.dt).ceil().max(1.0) as usize;
                let dt = (target - t) / steps as f64;
                for s in 0..steps {
                    step_mode(&mut col, eps, dt, h, lambda, &mut scratch)
                        .map_err(|e| Error::Numerical(format!("{e} (output {idx}, step {s})")))?;
                }
                t = target;
                out.push(col.clone());
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    times
        .iter()
        .enumerate()
        .map(|(idx, &t)| {
            let mut values = Vec::with_capacity(n * nd);
            for j in 0..nd {
                let modes: Vec<f64> = (0..n).map(|k| outputs[k][idx][j]).collect();
                values.extend(dct.inverse(&modes));
            }
            Ok((t, Field::new(g.clone(), values)?))
        })
        .collect()
}

/// `S₂(t) φ_b`, the large-diffusion limit.
pub fn limit_solution(phi_b: &BoundaryField, t: f64) -> Result<Field> {
    if !(t >= 0.0) {
        return domain("limit solution needs t >= 0");
    }
    Ok(S2Op::new(&phi_b.grid, t)?.apply(&phi_b.values))
}

/// Five-point Laplacian at interior nodes of a uniform grid (zero on the edges).
pub fn discrete_laplacian(f: &Field) -> Result<Field> {
    let g = &f.grid;
    let d = g.depth();
    let hd = d[1] - d[0];
    if d.windows(2).any(|w| ((w[1] - w[0]) - hd).abs() > 1e-9 * hd) {
        return domain("laplacian: depth spacing must be uniform");
    }
    let h = g.lateral_spacing();
    let mut out = Field::zeros(g);
    for k in 1..g.n_depth - 1 {
        for i in 1..g.n_prime - 1 {
            let c = f.at(i, k);
            let lap = (f.at(i - 1, k) - 2.0 * c + f.at(i + 1, k)) / (h * h)
                + (f.at(i, k - 1) - 2.0 * c + f.at(i, k + 1)) / (hd * hd);
            out.values[g.index(i, k)] = lap;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dct_round_trip_and_modes() {
        let d = Dct1::new(9);
        let u: Vec<f64> = (0..9).map(|i| ((i * i) as f64).sin()).collect();
        let back = d.inverse(&d.forward(&u));
        for (a, b) in u.iter().zip(&back) {
            assert!((a - b).abs() < 1e-13);
        }
        // a cosine mode is an eigenvector of the reflected second difference
        let h = 0.3;
        let v: Vec<f64> = (0..9).map(|i| d.cos[3 * 9 + i]).collect();
        for i in 0..9 {
            let l = if i == 0 { v[1] } else { v[i - 1] };
            let r = if i == 8 { v[7] } else { v[i + 1] };
            let lap = (l - 2.0 * v[i] + r) / (h * h);
            assert!((lap - d.eigenvalue(3, h) * v[i]).abs() < 1e-12);
        }
    }
}
