use std::sync::Arc;

use dynbc::duhamel_ops::TraceHistory;
use dynbc::grid::{BoundaryField, Field, HalfSpaceGrid};
use dynbc::kernels::Dim;
use dynbc::semigroups::{s1_apply, S1Op, S2Op};
use dynbc::solver::*;

fn grid() -> Arc<HalfSpaceGrid> {
    Arc::new(HalfSpaceGrid::stretched(Dim::new(2).unwrap(), 6.0, 14.0, 49, 41, 1.0, 16).unwrap())
}

fn problem(g: &Arc<HalfSpaceGrid>, phi: Field, phi_b: BoundaryField, eps: f64) -> ProblemSpec {
    ProblemSpec {
        grid: g.clone(),
        phi,
        phi_b,
        eps,
        horizon: 0.5,
    }
}

fn default_data(g: &Arc<HalfSpaceGrid>, eps: f64) -> ProblemSpec {
    let phi = Field::from_fn(g, |x, y| (-(x * x) - y * y).exp()).unwrap();
    let phi_b = BoundaryField::from_fn(g, |x| 1.0 / (1.0 + x * x)).unwrap();
    problem(g, phi, phi_b, eps)
}

fn cfg() -> SolverConfig {
    SolverConfig {
        time_nodes: 32,
        octaves: 12,
        ..SolverConfig::default()
    }
}

#[test]
fn prepare_examples() {
    let g = grid();
    let p = prepare(&problem(&g, Field::zeros(&g), BoundaryField::zeros(&g), 0.1)).unwrap();
    assert_eq!(p.m, 0.0);
    assert!(p.phi_cap.values.iter().all(|&v| v == 0.0));
    let p = prepare(&problem(&g, Field::constant(&g, 1.0), BoundaryField::zeros(&g), 0.1)).unwrap();
    assert_eq!(p.m, 16.0);
    assert!(p.phi_cap.values.iter().all(|&v| v == 1.0));
    let pb = BoundaryField::from_fn(&g, |x| (-x * x).exp()).unwrap();
    let phi = S2Op::new(&g, 0.0).unwrap().apply(&pb.values);
    let p = prepare(&problem(&g, phi, pb, 0.1)).unwrap();
    assert!(p.phi_cap.sup() < 1e-14);
    let mut bad = Field::zeros(&g);
    bad.values[3] = f64::NAN;
    assert!(prepare(&problem(&g, bad, BoundaryField::zeros(&g), 0.1)).is_err());
    assert!(prepare(&problem(&g, Field::zeros(&g), BoundaryField::zeros(&g), 1.5)).is_err());
}

#[test]
fn zero_problem_stays_zero() {
    let g = grid();
    let p = prepare(&problem(&g, Field::zeros(&g), BoundaryField::zeros(&g), 0.1)).unwrap();
    let run = continue_global(&p, 0.5, &cfg()).unwrap();
    assert!(run.failure.is_none());
    assert_eq!(run.iterations(), vec![1]);
    assert!(run.snapshots.iter().all(|s| s.u.values.iter().all(|&v| v == 0.0)));
}

#[test]
fn compatible_constants_are_exact() {
    let g = grid();
    for eps in [0.1, 1e-3] {
        let p = prepare(&problem(&g, Field::constant(&g, 1.0), BoundaryField::constant(&g, 1.0), eps)).unwrap();
        let run = continue_global(&p, 0.5, &cfg()).unwrap();
        for s in &run.snapshots {
            assert!(s.u.values.iter().all(|v| (v - 1.0).abs() < 1e-10));
        }
    }
}

#[test]
fn q_of_zero_with_zero_boundary_is_s1_phi() {
    let g = grid();
    let phi = Field::from_fn(&g, |x, y| (-(x * x) - (y - 1.0).powi(2)).exp()).unwrap();
    let p = prepare(&problem(&g, phi.clone(), BoundaryField::zeros(&g), 0.1)).unwrap();
    let c = cfg();
    let zero = TraceHistory::zeros(&g, 0.4, c.trace_per_octave, c.trace_per_octave * c.octaves + 1, -0.5).unwrap();
    let out = q_eps_apply(&p, &zero, 0.4, &c, true).unwrap();
    for (t, q, _) in out.fields.unwrap() {
        let direct = s1_apply(&S1Op::new(&g, t / 0.1).unwrap(), &phi).unwrap();
        assert!(q.sub(&direct).sup() < 1e-14);
    }
}

#[test]
fn default_data_run_invariants() {
    let g = grid();
    let eps = 0.05;
    let p = prepare(&default_data(&g, eps)).unwrap();
    let c = cfg();
    let run = continue_global(&p, 0.5, &c).unwrap();
    assert!(run.failure.is_none());
    for iv in &run.intervals {
        assert!(iv.xt_residual <= 2.0 * c.picard_tol * iv.m, "{} vs {}", iv.xt_residual, iv.m);
        assert!(iv.residuals.windows(2).all(|w| w[1] <= 0.5 * w[0]));
    }
    let xt = run.intervals[0].xt_norm;
    for s in &run.snapshots {
        // assembly is an exact nodewise sum
        for ((u, v), w) in s.u.values.iter().zip(&s.v.values).zip(&s.w.values) {
            assert_eq!(*u, v + w);
        }
        let bound = 1.0 + 2.0 * (eps * s.t).sqrt() * xt;
        assert!(s.w.sup() <= bound * (1.0 + 1e-6), "t={} {} {}", s.t, s.w.sup(), bound);
    }
}

#[test]
fn uniqueness_from_different_first_iterates() {
    let g = grid();
    let p = prepare(&default_data(&g, 0.1)).unwrap();
    let c = cfg();
    let a = solve_interval(&p, 0.25, &c, None).unwrap();
    let n = c.trace_per_octave * c.octaves + 1;
    let other = TraceHistory::from_fn(&g, a.record.t_len, c.trace_per_octave, n, -0.5, |s| {
        BoundaryField::from_fn(&g, |x| 0.3 * (x * 2.0).sin() * s.powf(-0.5) * 0.1f64.sqrt())
    })
    .unwrap();
    let b = solve_interval(&p, a.record.t_len, &c, Some(&other)).unwrap();
    let xt = XTNorm {
        t_end: a.record.t_len,
        eps: 0.1,
        samples: a.snapshots.iter().map(|s| s.t).collect(),
    };
    let diffs: Vec<(f64, f64)> = a
        .snapshots
        .iter()
        .zip(&b.snapshots)
        .map(|(x, y)| (x.v.sub(&y.v).sup(), (x.dv_sup - y.dv_sup).abs()))
        .collect();
    assert!(xt.eval(&diffs) < 10.0 * c.picard_tol * p.m, "{}", xt.eval(&diffs));
}

#[test]
fn continuation_matches_single_interval() {
    // Restarts compose operators on the truncated box, so the two runs agree on a compact
    // set up to the lateral truncation, which shrinks as the box widens.
    let gap = |r: f64, np: usize| {
        let g = Arc::new(HalfSpaceGrid::stretched(Dim::new(2).unwrap(), r, 14.0, np, 41, 1.0, 16).unwrap());
        let p = prepare(&default_data(&g, 0.1)).unwrap();
        let one = continue_global(&p, 0.5, &cfg()).unwrap();
        let split = SolverConfig {
            interval_guess: Some(0.25),
            ..cfg()
        };
        let two = continue_global(&p, 0.5, &split).unwrap();
        assert_eq!(one.intervals.len(), 1);
        assert_eq!(two.intervals.len(), 2);
        assert!((two.end_time() - 0.5).abs() < 1e-15);
        let a = &one.snapshots.last().unwrap().u;
        let b = &two.snapshots.last().unwrap().u;
        let mut m = 0.0f64;
        for k in 0..g.n_depth {
            for i in 0..g.n_prime {
                let (x, y) = g.coords(i, k);
                if x.abs() <= 2.0 && y <= 2.0 {
                    m = m.max((a.at(i, k) - b.at(i, k)).abs());
                }
            }
        }
        m / a.sup()
    };
    let narrow = gap(6.0, 49);
    let wide = gap(24.0, 193);
    assert!(narrow < 1e-3, "{narrow}");
    assert!(wide < 0.3 * narrow, "{narrow} {wide}");
}

#[test]
fn bad_configs_rejected() {
    let g = grid();
    let p = prepare(&default_data(&g, 0.1)).unwrap();
    for c in [
        SolverConfig { ratio_threshold: 1.0, ..cfg() },
        SolverConfig { octaves: 0, ..cfg() },
        SolverConfig { picard_tol: 0.0, ..cfg() },
        SolverConfig { interval_guess: Some(-1.0), ..cfg() },
    ] {
        assert!(continue_global(&p, 0.5, &c).is_err());
    }
    // an iteration cap of one cannot reach the tolerance on incompatible data
    let run = continue_global(&p, 0.5, &SolverConfig { max_iter: 1, ..cfg() }).unwrap();
    assert!(run.failure.is_some() && run.intervals.is_empty());
}
