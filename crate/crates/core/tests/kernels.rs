use std::f64::consts::PI;

use dynbc::kernels::*;
use dynbc::special::gauss_legendre;
use proptest::prelude::*;

// Composite Gauss–Legendre on [a, b] with `panels` equal panels.
fn gl(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let (x, w) = gauss_legendre(10);
    let h = (b - a) / panels as f64;
    let mut s = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        for (xi, wi) in x.iter().zip(&w) {
            s += 0.5 * h * wi * f(lo + 0.5 * h * (xi + 1.0));
        }
    }
    s
}

// Geometrically graded panels on [0, z_max] starting at `first`.
fn gl_graded(f: impl Fn(f64) -> f64, first: f64, z_max: f64) -> f64 {
    let mut s = gl(&f, 0.0, first, 4);
    let mut a = first;
    while a < z_max {
        let b = (a * 1.5).min(z_max);
        s += gl(&f, a, b, 1);
        a = b;
    }
    s
}

fn point(x: [f64; 2], y: [f64; 2], t: f64) -> KernelPoint {
    KernelPoint::new(x.to_vec(), y.to_vec(), t).unwrap()
}

#[test]
fn gauss_kernel_examples() {
    assert!((gauss_kernel(1, &[0.0], 1.0 / (4.0 * PI)).unwrap() - 1.0).abs() < 1e-15);
    let v = gauss_kernel(1, &[2.0], 1.0).unwrap();
    assert!((v - (4.0 * PI).powf(-0.5) * (-1.0f64).exp()).abs() < 1e-16);
    let mass = gl(|z| gauss_kernel(1, &[z], 1.0).unwrap(), -40.0, 40.0, 80);
    assert!((mass - 1.0).abs() < 1e-13);
    assert!((gauss_kernel(2, &[0.0, 0.0], 1.0).unwrap() - 1.0 / (4.0 * PI)).abs() < 1e-16);
}

#[test]
fn dirichlet_kernel_examples() {
    assert_eq!(dirichlet_heat_kernel(&point([0.0, 0.0], [0.0, 1.0], 1.0)).unwrap(), 0.0);
    let v = dirichlet_heat_kernel(&point([0.0, 1.0], [0.0, 1.0], 1.0)).unwrap();
    let hand = (1.0 - (-1.0f64).exp()) / (4.0 * PI);
    assert!((v - hand).abs() < 1e-16);
    // the commonly quoted 0.05025 is a rounding of 0.050303
    assert!((v - 0.050303).abs() < 1e-6);
    let fact = gamma1(0.0, 1.0) * (gamma1(0.0, 1.0) - gamma1(2.0, 1.0));
    assert!((v - fact).abs() < 1e-16);
}

#[test]
fn k_at_boundary_is_the_coinciding_product() {
    for (yp, yn, t) in [(0.3, 0.5, 1.0), (-1.0, 2.0, 0.3), (0.0, 0.01, 0.02)] {
        let k = dirichlet_kernel_dxn(&point([0.0, 0.0], [yp, yn], t)).unwrap();
        let expect = gamma1(yp, t) * (yn / t) * gamma1(yn, t);
        assert!((k - expect).abs() <= 1e-14 * expect.abs());
        assert!(k > 0.0);
    }
}

// ∫|K| dy factorizes into the lateral Gaussian mass and a depth integral.
fn abs_k_mass(x_n: f64, t: f64) -> f64 {
    let lateral = gl(|z| gamma1(z, t), -40.0 * t.sqrt(), 40.0 * t.sqrt(), 80);
    let depth = |y: f64| {
        (-((x_n - y) / (2.0 * t)) * gamma1(x_n - y, t) + ((x_n + y) / (2.0 * t)) * gamma1(x_n + y, t)).abs()
    };
    let top = x_n + 40.0 * t.sqrt();
    // split at the sign change region around x_N for accuracy
    let d = if x_n > 0.0 {
        gl(depth, 0.0, x_n, 200) + gl(depth, x_n, top, 400)
    } else {
        gl(depth, 0.0, top, 400)
    };
    lateral * d
}

#[test]
fn abs_k_mass_equals_bound_at_boundary() {
    for t in [0.01, 0.3, 1.0, 7.0] {
        let m = abs_k_mass(0.0, t);
        let bound = (PI * t).powf(-0.5);
        assert!((m - bound).abs() < 1e-6, "t={t}: {m} vs {bound}");
    }
}

#[test]
fn abs_k_mass_below_bound_inside() {
    for (x_n, t) in [(0.1, 1.0), (1.0, 1.0), (0.5, 0.05), (3.0, 2.0)] {
        let m = abs_k_mass(x_n, t);
        assert!(m <= (PI * t).powf(-0.5) * (1.0 + 1e-8), "x_N={x_n}, t={t}: {m}");
    }
}

#[test]
fn k_matches_central_differences_at_second_order() {
    let pts = [([0.2, 0.7], [0.5, 0.3], 0.4), ([1.0, 0.1], [-0.5, 1.2], 1.3)];
    for (x, y, t) in pts {
        let k = dirichlet_kernel_dxn(&point(x, y, t)).unwrap();
        let err = |h: f64| {
            let up = dirichlet_heat_kernel(&point([x[0], x[1] + h], y, t)).unwrap();
            let dn = dirichlet_heat_kernel(&point([x[0], x[1] - h], y, t)).unwrap();
            ((up - dn) / (2.0 * h) - k).abs()
        };
        let (e1, e2) = (err(1e-2), err(5e-3));
        let ratio = e1 / e2;
        assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
    }
}

#[test]
fn normalization_constants() {
    let c2 = normalization_constant(2).unwrap();
    let c3 = normalization_constant(3).unwrap();
    assert!((c2 - 1.0 / PI).abs() < 1e-9);
    assert!((c3 - 1.0 / (2.0 * PI)).abs() < 1e-9);
    // independent: ∫(1+z²)^{-1} = π on graded panels plus the 1/Z tail
    let z = 1e6;
    let half = gl_graded(|z| 1.0 / (1.0 + z * z), 1.0, z) + 1.0 / z;
    assert!((2.0 * half - PI).abs() < 1e-9);
    // polar: ∫_{R²}(1+|z|²)^{-3/2} = 2π
    let radial = gl_graded(|r| r * (1.0 + r * r).powf(-1.5), 1.0, z) + 1.0 / z;
    assert!((2.0 * PI * radial - 2.0 * PI).abs() < 1e-8);
    assert!(normalization_constant(1).is_err());
    for n in 4..8 {
        assert!(normalization_constant(n).unwrap() > 0.0);
    }
}

#[test]
fn normalization_constant_is_thread_safe() {
    let handles: Vec<_> = (0..8).map(|_| std::thread::spawn(|| normalization_constant(5).unwrap())).collect();
    let vals: Vec<f64> = handles.into_iter().map(|h| h.join().unwrap()).collect();
    assert!(vals.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn poisson_kernel_examples() {
    let c2 = 1.0 / PI;
    assert!((poisson_dyn_kernel(&[0.0], 0.0, 1.0).unwrap() - c2).abs() < 1e-9);
    for (a, b) in [(0.2, 0.3), (1.0, 4.0), (0.01, 0.0)] {
        let p = poisson_dyn_kernel(&[0.7], a, b).unwrap();
        let q = poisson_dyn_kernel(&[0.7], 0.0, a + b).unwrap();
        assert!((p - q).abs() < 1e-15 * p);
    }
    assert!((poisson_dyn_kernel_dt(&[0.0], 0.0, 1.0).unwrap() + c2).abs() < 1e-9);
}

// ∫ P dx' for N = 2 on graded panels, with the leading-order 1/Z tail.
fn poisson_mass_2d(x_n: f64, t: f64) -> f64 {
    let s = x_n + t;
    let z = 1e5 * s;
    let half = gl_graded(|x| poisson_dyn_kernel(&[x], x_n, t).unwrap(), s, z);
    2.0 * (half + normalization_constant(2).unwrap() * s / z)
}

fn poisson_mass_3d(x_n: f64, t: f64) -> f64 {
    let s = x_n + t;
    let r_max = 1e5 * s;
    let radial = gl_graded(|r| 2.0 * PI * r * poisson_dyn_kernel(&[r, 0.0], x_n, t).unwrap(), s, r_max);
    radial + 2.0 * PI * normalization_constant(3).unwrap() * s / r_max
}

#[test]
fn poisson_kernel_has_unit_mass() {
    let samples = [
        (0.5, 2.0),
        (0.0, 1.0),
        (0.01, 0.0),
        (1e-3, 1e-3),
        (3.0, 0.5),
        (0.0, 10.0),
        (0.2, 0.2),
        (5.0, 5.0),
        (0.0, 0.05),
        (0.7, 0.0),
    ];
    for (x_n, t) in samples {
        let m2 = poisson_mass_2d(x_n, t);
        let m3 = poisson_mass_3d(x_n, t);
        assert!((m2 - 1.0).abs() < 1e-8, "N=2 ({x_n},{t}): {m2}");
        assert!((m3 - 1.0).abs() < 1e-8, "N=3 ({x_n},{t}): {m3}");
    }
}

#[test]
fn dt_sign_change_at_unit_radius() {
    for x in [0.2, 0.9, 0.999] {
        assert!(poisson_dyn_kernel_dt(&[x], 0.4, 0.6).unwrap() < 0.0);
    }
    for x in [1.001, 1.5, 10.0] {
        assert!(poisson_dyn_kernel_dt(&[x], 0.4, 0.6).unwrap() > 0.0);
    }
}

#[test]
fn dt_matches_central_differences() {
    for (x, xn, t) in [(0.3, 0.2, 0.5), (2.0, 0.0, 1.0), (0.0, 1.0, 0.25)] {
        let d = poisson_dyn_kernel_dt(&[x], xn, t).unwrap();
        let err = |h: f64| {
            let fd = (poisson_dyn_kernel(&[x], xn, t + h).unwrap() - poisson_dyn_kernel(&[x], xn, t - h).unwrap())
                / (2.0 * h);
            (fd - d).abs()
        };
        let ratio = err(1e-2) / err(5e-3);
        assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
    }
}

#[test]
fn tails_agree_with_quadrature() {
    let (d, t) = (1.3, 0.4);
    let q = gl(|z| gamma1(z, t), d, d + 40.0, 200);
    assert!((gauss_tail_1d(d, t) - q).abs() < 1e-14);
    let s = 0.6;
    let q = gl_graded(|z| poisson_dyn_kernel(&[z + d], 0.0, s).unwrap(), 1.0, 1e6) + s / (PI * 1e6);
    assert!((poisson_tail_2d(d, s) - q).abs() < 1e-9);
    let r = 2.0;
    let q = gl_graded(|z| 2.0 * PI * (z + r) * poisson_dyn_kernel(&[z + r, 0.0], 0.0, s).unwrap(), 1.0, 1e6)
        + s / 1e6;
    assert!((poisson_cap_mass_3d(r, s) - q).abs() < 1e-8);
}

proptest! {
    #[test]
    fn dirichlet_kernel_positive_symmetric_factorized(
        a in -3.0f64..3.0, b in 0.0f64..3.0, c in -3.0f64..3.0, d in 0.01f64..3.0, t in 0.01f64..5.0
    ) {
        let p = point([a, b], [c, d], t);
        let g = dirichlet_heat_kernel(&p).unwrap();
        prop_assert!(g >= 0.0);
        if b > 0.0 {
            let q = point([c, d], [a, b], t);
            let g2 = dirichlet_heat_kernel(&q).unwrap();
            prop_assert!((g - g2).abs() <= 1e-15 * g.abs().max(1e-300));
        }
        let lat = gamma1(a - c, t);
        let fact = lat * (gamma1(b - d, t) - gamma1(b + d, t));
        prop_assert!((g - fact).abs() <= 1e-14 * lat);
    }

    #[test]
    fn poisson_dt_bound(x in -20.0f64..20.0, y in -20.0f64..20.0, xn in 0.0f64..5.0, t in 1e-3f64..5.0) {
        let s = xn + t;
        let p2 = poisson_dyn_kernel(&[x], xn, t).unwrap();
        let d2 = poisson_dyn_kernel_dt(&[x], xn, t).unwrap();
        prop_assert!(d2.abs() <= p2 / s * (1.0 + 1e-14));
        let p3 = poisson_dyn_kernel(&[x, y], xn, t).unwrap();
        let d3 = poisson_dyn_kernel_dt(&[x, y], xn, t).unwrap();
        prop_assert!(d3.abs() <= 2.0 * p3 / s * (1.0 + 1e-14));
    }
}
