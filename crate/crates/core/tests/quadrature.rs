use std::f64::consts::PI;
use std::sync::Arc;

use dynbc::grid::{BoundaryField, Field, HalfSpaceGrid};
use dynbc::kernels::{dirichlet_heat_kernel, gamma1, gauss_tail_1d, poisson_dyn_kernel, poisson_tail_2d, Dim, KernelPoint};
use dynbc::quadrature::*;
use proptest::prelude::*;

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
    }
    s * h / 3.0
}

// B(a, b) = ∫_0^1 s^{a-1}(1-s)^{b-1} ds, with s = u^{1/a} on [0, 1/2] and
// 1 - s = v^{1/b} on [1/2, 1] so both pieces are smooth for Simpson.
fn beta_oracle(a: f64, b: f64) -> f64 {
    let left = simpson(
        |u: f64| {
            let s = u.powf(1.0 / a);
            (1.0 - s).powf(b - 1.0) / a
        },
        0.0,
        0.5f64.powf(a),
        20000,
    );
    let right = simpson(
        |v: f64| {
            let r = v.powf(1.0 / b);
            (1.0 - r).powf(a - 1.0) / b
        },
        0.0,
        0.5f64.powf(b),
        20000,
    );
    left + right
}

fn grid(r: f64, l: f64, np: usize, nd: usize) -> Arc<HalfSpaceGrid> {
    Arc::new(HalfSpaceGrid::uniform(Dim::new(2).unwrap(), r, l, np, nd).unwrap())
}

#[test]
fn beta_oracle_sanity() {
    // B(1/2, 1/2) = π, B(1, 1/2) = 2
    assert!((beta_oracle(0.5, 0.5) - PI).abs() < 1e-9);
    assert!((beta_oracle(1.0, 0.5) - 2.0).abs() < 1e-9);
}

#[test]
fn duhamel_integrate_examples() {
    let rule = TimeQuadRule::new(64, 0.5, 0.5).unwrap();
    let one = duhamel_integrate(|_, _| Ok(1.0), 2.0, &rule).unwrap();
    assert!((one - 2.0).abs() < 1e-9);
    let r = TimeQuadRule::new(64, 0.5, 0.0).unwrap();
    let v = duhamel_integrate(|s, _| Ok(s.powf(-0.5)), 1.0, &r).unwrap();
    assert!((v - 2.0).abs() < 1e-8);
    let r = TimeQuadRule::new(64, 0.0, 0.5).unwrap();
    let v = duhamel_integrate(|_, rem| Ok(rem.powf(-0.5)), 1.0, &r).unwrap();
    assert!((v - 2.0).abs() < 1e-8);
}

#[test]
fn duhamel_integrate_beta_shapes() {
    let b = beta_oracle(0.75, 0.5);
    assert!((b - 2.3962).abs() < 1e-4);
    let r = TimeQuadRule::new(64, 0.25, 0.5).unwrap();
    let v = duhamel_integrate(|s, rem| Ok(rem.powf(-0.5) * s.powf(-0.25)), 1.0, &r).unwrap();
    assert!((v - b).abs() < 1e-6, "{v} vs {b}");
    // worst declared exponent
    let b = beta_oracle(0.5, 0.125);
    let r = TimeQuadRule::new(64, 0.5, 0.875).unwrap();
    let v = duhamel_integrate(|s, rem| Ok(s.powf(-0.5) * rem.powf(-0.875)), 1.0, &r).unwrap();
    assert!((v - b).abs() < 1e-6 * b, "{v} vs {b}");
    // scaling in t: ∫_0^t s^{1/4}(t-s)^{-7/8} = B(5/4, 1/8) t^{3/8}
    let b = beta_oracle(1.25, 0.125);
    let r = TimeQuadRule::new(64, 0.0, 0.875).unwrap();
    let t = 0.3;
    let v = duhamel_integrate(|s, rem| Ok(s.powf(0.25) * rem.powf(-0.875)), t, &r).unwrap();
    assert!((v - b * t.powf(0.375)).abs() < 1e-6 * v);
}

#[test]
fn duhamel_integrate_is_linear_on_fields() {
    let g = grid(1.0, 1.0, 5, 4);
    let rule = TimeQuadRule::new(32, 0.5, 0.0).unwrap();
    let f = Field::from_fn(&g, |x, y| x + y * y).unwrap();
    let h = Field::from_fn(&g, |x, y| (x * y).cos()).unwrap();
    let a = duhamel_integrate(|s, _| Ok(f.scaled(s.powf(-0.5))), 0.7, &rule).unwrap();
    let b = duhamel_integrate(|s, _| Ok(h.scaled(s.sin())), 0.7, &rule).unwrap();
    let c = duhamel_integrate(
        |s, _| {
            let mut x = f.scaled(2.0 * s.powf(-0.5));
            x.axpy(-3.0 * s.sin(), &h);
            Ok(x)
        },
        0.7,
        &rule,
    )
    .unwrap();
    for i in 0..c.values.len() {
        let lin = 2.0 * a.values[i] - 3.0 * b.values[i];
        assert!((c.values[i] - lin).abs() <= 1e-12 * (1.0 + lin.abs()));
    }
}

#[test]
fn convolve_boundary_examples() {
    let g = grid(12.0, 1.0, 257, 2);
    let h = g.lateral_spacing();
    let st = LateralStencil::from_kernel(
        |z| poisson_dyn_kernel(&[z], 0.0, 1.0).unwrap(),
        |d| poisson_tail_2d(d, 1.0),
        h,
        g.n_prime,
        true,
    )
    .unwrap();
    let one = convolve_boundary(&st, &BoundaryField::constant(&g, 1.0)).unwrap();
    assert!(one.values.iter().all(|v| (v - 1.0).abs() < 1e-6));
    let zero = convolve_boundary(&st, &BoundaryField::zeros(&g)).unwrap();
    assert!(zero.values.iter().all(|&v| v == 0.0));
    let gs = LateralStencil::from_kernel(|z| gamma1(z, 0.3), |d| gauss_tail_1d(d, 0.3), h, g.n_prime, true).unwrap();
    let bump = BoundaryField::from_fn(&g, |x| if x.abs() < 1.0 { 1.0 } else { 0.0 }).unwrap();
    let out = convolve_boundary(&gs, &bump).unwrap();
    assert!(out.values.iter().all(|&v| v <= 1.0 + 1e-12 && v >= 0.0));
}

#[test]
fn band_limited_poisson_stencil_matches_trapezoid_for_smooth_kernels() {
    // for σ ≫ h the aliasing factor is 1 - O(e^{-πσ/h})
    let (h, n, sigma) = (0.1, 101, 1.5);
    let bl = LateralStencil::poisson(sigma, h, n).unwrap();
    for d in 0..20isize {
        let tr = h * poisson_dyn_kernel(&[d as f64 * h], 0.0, sigma).unwrap();
        assert!((bl.weight(d) - tr).abs() < 1e-18 + 1e-12 * tr);
    }
    for i in [0, 30, 50, 100] {
        let exact = poisson_tail_2d(i as f64 * h + 0.5 * h, sigma);
        // lattice tail vs continuous tail beyond the half cell: second-order close
        assert!((bl.left_tail(i) - exact).abs() < 1e-3);
    }
}

struct Dirichlet(f64);

impl HalfSpaceKernel for Dirichlet {
    fn eval(&self, xp: f64, xn: f64, yp: f64, yn: f64) -> f64 {
        gamma1(xp - yp, self.0) * (gamma1(xn - yn, self.0) - gamma1(xn + yn, self.0))
    }

    fn lateral_tail(&self, xn: f64, yn: f64, d: f64) -> f64 {
        gauss_tail_1d(d, self.0) * (gamma1(xn - yn, self.0) - gamma1(xn + yn, self.0))
    }

    fn depth_tail(&self, xp: f64, xn: f64, yp: f64, l: f64) -> f64 {
        gamma1(xp - yp, self.0) * (gauss_tail_1d(l - xn, self.0) - gauss_tail_1d(l + xn, self.0))
    }
}

#[test]
fn dirichlet_test_kernel_matches_library() {
    let p = KernelPoint::new(vec![0.3, 0.4], vec![-0.2, 1.1], 0.25).unwrap();
    let v = Dirichlet(0.25).eval(0.3, 0.4, -0.2, 1.1);
    assert!((v - dirichlet_heat_kernel(&p).unwrap()).abs() < 1e-15);
}

#[test]
fn convolve_halfspace_constant_gives_erf() {
    let g = grid(4.2, 3.0, 15, 601);
    let phi = Field::constant(&g, 1.0);
    let out = convolve_halfspace(&Dirichlet(0.25), &phi).unwrap();
    let (i, k) = g.nearest_node(0.0, 1.0);
    assert_eq!(g.coords(i, k), (0.0, 1.0));
    // independent oracle: depth-factor integral by Simpson
    let oracle = simpson(|y| gamma1(1.0 - y, 0.25) - gamma1(1.0 + y, 0.25), 0.0, 20.0, 40000);
    assert!((oracle - 0.8427007929).abs() < 1e-9);
    assert!((out.at(i, k) - oracle).abs() < 1e-5, "{} vs {oracle}", out.at(i, k));
    let zero = convolve_halfspace(&Dirichlet(0.25), &Field::zeros(&g)).unwrap();
    assert!(zero.values.iter().all(|&v| v == 0.0));
}

#[test]
fn gaussian_hat_stencil_is_second_order() {
    let tau: f64 = 0.2;
    let exact = |x: f64| (1.0 + 4.0 * tau).powf(-0.5) * (-x * x / (1.0 + 4.0 * tau)).exp();
    let err = |n: usize| {
        let g = grid(6.0, 1.0, n, 2);
        let st = LateralStencil::gaussian(tau, g.lateral_spacing(), n).unwrap();
        let psi: Vec<f64> = g.lateral().iter().map(|x| (-x * x).exp()).collect();
        let out = st.apply(&psi);
        g.lateral().iter().zip(&out).map(|(&x, v)| (v - exact(x)).abs()).fold(0.0, f64::max)
    };
    let (e1, e2) = (err(49), err(97));
    assert!(e1 / e2 >= 3.0, "{e1} {e2}");
}

proptest! {
    #[test]
    fn stencils_are_linear_and_monotone(
        data in prop::collection::vec(-1.0f64..1.0, 33),
        other in prop::collection::vec(-1.0f64..1.0, 33),
        sigma in 0.0f64..3.0,
        tau in 1e-3f64..10.0,
    ) {
        let h = 0.125;
        for st in [LateralStencil::poisson(sigma, h, 33).unwrap(), LateralStencil::gaussian(tau, h, 33).unwrap()] {
            let a = st.apply(&data);
            let b = st.apply(&other);
            let sum: Vec<f64> = data.iter().zip(&other).map(|(x, y)| 2.0 * x - y).collect();
            let c = st.apply(&sum);
            for i in 0..33 {
                prop_assert!((c[i] - (2.0 * a[i] - b[i])).abs() <= 1e-12 * (1.0 + c[i].abs()));
            }
            let pos: Vec<f64> = data.iter().map(|x| x.abs()).collect();
            prop_assert!(st.apply(&pos).iter().all(|&v| v >= 0.0));
            let sup = data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            prop_assert!(a.iter().all(|v| v.abs() <= sup * (1.0 + 1e-12)));
        }
    }
}
