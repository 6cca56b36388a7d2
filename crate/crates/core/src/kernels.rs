//! Pointwise kernels: Gauss, Dirichlet heat kernel on the half-space, its normal
//! derivative, and the Poisson-type kernel of the dynamical boundary problem.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{domain, Result};
use crate::special::{erfc, gamma_half_integer, gauss_legendre};

/// Spatial dimension `N >= 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Dim(usize);

impl Dim {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return domain(format!("dimension must be >= 2, got {n}"));
        }
        Ok(Dim(n))
    }

    pub fn get(self) -> usize {
        self.0
    }
}

/// Argument triple `(x, y, t)` with `x` in the closed and `y` in the open half-space.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelPoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub t: f64,
}

impl KernelPoint {
    pub fn new(x: Vec<f64>, y: Vec<f64>, t: f64) -> Result<Self> {
        if x.len() < 2 || x.len() != y.len() {
            return domain("x and y must share a dimension >= 2");
        }
        let n = x.len();
        if !(t > 0.0) {
            return domain(format!("time must be positive, got {t}"));
        }
        if !(x[n - 1] >= 0.0) {
            return domain("x_N must be >= 0");
        }
        if !(y[n - 1] > 0.0) {
            return domain("y_N must be > 0");
        }
        Ok(KernelPoint { x, y, t })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    fn lateral_dist2(&self) -> f64 {
        let n = self.dim();
        (0..n - 1).map(|i| (self.x[i] - self.y[i]).powi(2)).sum()
    }
}

/// One-dimensional heat kernel, unchecked hot path.
#[inline]
pub fn gamma1(z: f64, t: f64) -> f64 {
    (-z * z / (4.0 * t)).exp() / (4.0 * PI * t).sqrt()
}

pub fn gauss_kernel(d: usize, z: &[f64], t: f64) -> Result<f64> {
    if d == 0 || z.len() != d {
        return domain("gauss kernel needs d >= 1 and |z| of length d");
    }
    if !(t > 0.0) {
        return domain(format!("time must be positive, got {t}"));
    }
    let r2: f64 = z.iter().map(|v| v * v).sum();
    Ok((4.0 * PI * t).powf(-(d as f64) / 2.0) * (-r2 / (4.0 * t)).exp())
}

pub fn dirichlet_heat_kernel(p: &KernelPoint) -> Result<f64> {
    let n = p.dim();
    let lat = p.lateral_dist2();
    let xn = p.x[n - 1];
    let yn = p.y[n - 1];
    let t = p.t;
    let pre = (4.0 * PI * t).powf(-(n as f64) / 2.0);
    let a = (-(lat + (xn - yn).powi(2)) / (4.0 * t)).exp();
    let b = (-(lat + (xn + yn).powi(2)) / (4.0 * t)).exp();
    Ok(pre * (a - b))
}

pub fn dirichlet_kernel_dxn(p: &KernelPoint) -> Result<f64> {
    let n = p.dim();
    let t = p.t;
    let xn = p.x[n - 1];
    let yn = p.y[n - 1];
    let lat = (4.0 * PI * t).powf(-((n - 1) as f64) / 2.0) * (-p.lateral_dist2() / (4.0 * t)).exp();
    let depth = -((xn - yn) / (2.0 * t)) * gamma1(xn - yn, t) + ((xn + yn) / (2.0 * t)) * gamma1(xn + yn, t);
    Ok(lat * depth)
}

/// `c_N` with `∫ c_N (1+|z|²)^{-N/2} dz = 1` over `R^{N-1}`, computed by quadrature and memoized.
pub fn normalization_constant(n: usize) -> Result<f64> {
    const CACHED: usize = 16;
    static CACHE: [OnceLock<f64>; CACHED] = [const { OnceLock::new() }; CACHED];
    if n < 2 {
        return domain(format!("dimension must be >= 2, got {n}"));
    }
    if n < CACHED {
        return Ok(*CACHE[n].get_or_init(|| compute_normalization(n)));
    }
    Ok(compute_normalization(n))
}

// With z = r ω and r = tan θ the radial integral becomes ∫_0^{π/2} sin^{N-2}θ dθ.
fn compute_normalization(n: usize) -> f64 {
    let sphere = 2.0 * PI.powf((n as f64 - 1.0) / 2.0) / gamma_half_integer(n as u32 - 1);
    let (x, w) = gauss_legendre(48);
    let half = PI / 4.0;
    let radial: f64 = x
        .iter()
        .zip(&w)
        .map(|(&xi, &wi)| wi * half * (half * (xi + 1.0)).sin().powi(n as i32 - 2))
        .sum();
    1.0 / (sphere * radial)
}

fn check_sigma(x_n: f64, t: f64) -> Result<f64> {
    if !(x_n >= 0.0) || !(t >= 0.0) {
        return domain("x_N and t must be nonnegative");
    }
    let s = x_n + t;
    if !(s > 0.0) {
        return domain("x_N + t must be positive (the t = x_N = 0 kernel is a delta)");
    }
    Ok(s)
}

pub fn poisson_dyn_kernel(x_prime: &[f64], x_n: f64, t: f64) -> Result<f64> {
    let s = check_sigma(x_n, t)?;
    let n = x_prime.len() + 1;
    let c = normalization_constant(n)?;
    let r2: f64 = x_prime.iter().map(|v| v * v).sum();
    Ok(poisson_sigma(c, n, r2, s))
}

pub fn poisson_dyn_kernel_dt(x_prime: &[f64], x_n: f64, t: f64) -> Result<f64> {
    let s = check_sigma(x_n, t)?;
    let n = x_prime.len() + 1;
    let c = normalization_constant(n)?;
    let r2: f64 = x_prime.iter().map(|v| v * v).sum();
    let bracket = (r2 - (n as f64 - 1.0) * s * s) / (r2 + s * s);
    Ok(bracket / s * poisson_sigma(c, n, r2, s))
}

#[inline]
fn poisson_sigma(c: f64, n: usize, r2: f64, s: f64) -> f64 {
    c * s.powi(1 - n as i32) * (1.0 + r2 / (s * s)).powf(-(n as f64) / 2.0)
}

/// Mass of `Γ₁(·, t)` beyond distance `d >= 0` on one side.
pub fn gauss_tail_1d(d: f64, t: f64) -> f64 {
    0.5 * erfc(d / (2.0 * t.sqrt()))
}

/// Mass of the `N = 2` kernel `P(·, 0, σ)` beyond distance `d >= 0` on one side.
pub fn poisson_tail_2d(d: f64, sigma: f64) -> f64 {
    (sigma / d).atan() / PI
}

/// Mass of the `N = 3` kernel `P(·, 0, σ)` outside the disk of radius `r`.
pub fn poisson_cap_mass_3d(r: f64, sigma: f64) -> f64 {
    sigma / (sigma * sigma + r * r).sqrt()
}
