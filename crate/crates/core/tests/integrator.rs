mod common;

use burgers_ph::diagnostics::hamiltonian;
use burgers_ph::harness::{run_cell, run_sweep, SweepGrid};
use burgers_ph::integrator::{cn_residual, newton_solve, RunConfig, Simulation, Termination};
use burgers_ph::phsystem::{Mode, State};
use burgers_ph::run_simulation;
use common::*;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

fn norm_inf(x: &[f64]) -> f64 {
    x.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

#[test]
fn newton_solution_satisfies_the_step_equation() {
    let mut rng = StdRng::seed_from_u64(31);
    for mode in [Mode::Inviscid, Mode::Viscous { nu: 0.02 }] {
        let o = ops(30);
        let s = State::consistent(&o, 0.0, random_positive(&o.mesh, &mut rng), mode).unwrap();
        let dt = 0.01;
        let res = newton_solve(&o, &s, dt, 1e-12, 20).unwrap();
        let f = cn_residual(&o, &s, &res.v, dt).unwrap();
        let scale = norm_inf(&o.mass.matvec(&s.v));
        assert!(norm_inf(&f) <= 1e-9 * scale, "{mode:?}: {}", norm_inf(&f));
    }
}

#[test]
fn zero_dt_step_is_the_identity() {
    let o = ops(12);
    let mut rng = StdRng::seed_from_u64(4);
    let s = State::consistent(&o, 0.0, random_positive(&o.mesh, &mut rng), Mode::Viscous { nu: 0.05 }).unwrap();
    let res = newton_solve(&o, &s, 0.0, 1e-10, 5).unwrap();
    assert_eq!(res.iterations, 0);
    assert_eq!(res.v, s.v);
}

#[test]
fn adaptive_run_lands_on_the_final_time() {
    let out = run_simulation(RunConfig::<f64> {
        t_final: 0.13,
        snapshots: 4,
        ..RunConfig::with_width(1e-2)
    })
    .unwrap();
    assert_eq!(out.summary.termination, Termination::Completed);
    assert_eq!(out.final_state.t, 0.13);
    let times: Vec<f64> = out.ledger.entries().iter().map(|e| e.t).collect();
    assert!(times.windows(2).all(|w| w[1] > w[0]));
    assert_eq!(*times.last().unwrap(), 0.13);
    assert_eq!(out.snapshots.len(), 5);
    assert_eq!(out.snapshots[0].t, 0.0);
    assert_eq!(out.ledger.len(), out.summary.n_steps + 1);
}

#[test]
fn fixed_dt_takes_exactly_the_requested_steps() {
    let out = run_simulation(RunConfig::<f64> {
        t_final: 0.05,
        fixed_dt: Some(0.005),
        ..RunConfig::with_width(1e-2)
    })
    .unwrap();
    assert_eq!(out.summary.n_steps, 10);
    assert_eq!(out.summary.rejected_steps, 0);
}

#[test]
fn controller_never_exceeds_the_step_cap() {
    let cfg = RunConfig::<f64>::with_width(1e-2);
    let cap = cfg.dt_cap();
    let out = run_simulation(cfg).unwrap();
    assert!(out.ledger.entries().iter().all(|e| e.dt <= cap * (1.0 + 1e-12)));
}

#[test]
fn impossible_newton_tolerance_underflows() {
    let out = run_simulation(RunConfig::<f64> {
        newton_tol: 1e-30,
        newton_max_iter: 1,
        ..RunConfig::with_width(1e-2)
    })
    .unwrap();
    assert_eq!(out.summary.termination, Termination::DtUnderflow);
    assert_eq!(out.summary.n_steps, 0);
    assert_eq!(out.snapshots.last().unwrap().t, 0.0);
}

#[test]
fn inviscid_parabola_tracks_characteristics() {
    // v₀ = x(1 − x) keeps zero traces; away from the walls v stays close to the
    // characteristics solution over a short horizon
    let cfg = RunConfig::<f64> {
        n_elems: 40,
        beta: 0.0,
        t_final: 0.05,
        ..Default::default()
    };
    let mesh = burgers_ph::build_mesh::<f64>(40).unwrap();
    let v0 = mesh.interpolate(|x| x * (1.0 - x));
    let mut sim = Simulation::from_coefficients(cfg, v0).unwrap();
    assert!(sim.advance_to(0.05));
    // x(1−x) with ξ + t ξ(1−ξ) = x, solved by Newton for the foot point
    let exact = |x: f64| {
        let t = 0.05;
        let mut xi = x;
        for _ in 0..50 {
            let g = xi + t * xi * (1.0 - xi) - x;
            xi -= g / (1.0 + t * (1.0 - 2.0 * xi));
        }
        xi * (1.0 - xi)
    };
    let err = (20..=80)
        .map(|k| k as f64 / 100.0)
        .map(|x| (sim.ops().mesh.eval(&sim.state().v, x) - exact(x)).abs())
        .fold(0.0, f64::max);
    assert!(err < 5e-3, "max error {err}");
}

#[test]
fn generic_scalar_runs_in_single_precision() {
    let cfg = RunConfig::<f32> {
        n_elems: 100,
        t_final: 0.05,
        newton_tol: 1e-4,
        ..Default::default()
    };
    let out = run_simulation(cfg).unwrap();
    assert_eq!(out.summary.termination, Termination::Completed);
    let reference = run_simulation(RunConfig::<f64> {
        n_elems: 100,
        t_final: 0.05,
        ..Default::default()
    })
    .unwrap();
    let mesh = burgers_ph::build_mesh::<f64>(100).unwrap();
    let h32 = hamiltonian(&mesh, &out.final_state.v.iter().map(|&x| x as f64).collect::<Vec<_>>());
    let h64 = hamiltonian(&mesh, &reference.final_state.v);
    assert!((h32 - h64).abs() < 1e-4 * h64);
}

#[test]
fn sweep_cells_are_reproducible_alone() {
    let mut grid = SweepGrid {
        alphas: vec![1.0, 2.0],
        betas: vec![0.0, 1.0],
        hs: vec![1e-2, 2e-2],
        base: RunConfig::default(),
    };
    grid.base.t_final = 0.1;
    let sweep = run_sweep(&grid, 3).unwrap();
    assert_eq!(sweep.cells.len(), 8);
    for c in &sweep.cells {
        let (alone, _) = run_cell(&grid, c.alpha, c.beta, c.h);
        assert_eq!((alone.var, alone.t_final, alone.n_steps), (c.var, c.t_final, c.n_steps));
        assert_eq!(alone.status, c.status);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn converged_steps_satisfy_the_step_equation(
        offset in 0.5f64..1.5,
        amps in proptest::collection::vec(-0.2f64..0.2, 3),
        dt in 1e-3f64..2e-2,
    ) {
        let o = ops(20);
        let v = positive_from(&o.mesh, offset, &amps);
        let s = State::consistent(&o, 0.0, v, Mode::Viscous { nu: 0.05 }).unwrap();
        let res = newton_solve(&o, &s, dt, 1e-10, 20);
        prop_assume!(res.is_ok());
        let f = cn_residual(&o, &s, &res.unwrap().v, dt).unwrap();
        prop_assert!(norm_inf(&f) <= 1e-8 * norm_inf(&o.mass.matvec(&s.v)));
    }

    #[test]
    fn var_is_nonnegative_and_finite(beta in prop_oneof![Just(0.0), 0.5f64..3.0], alpha in 0.5f64..2.0) {
        let out = run_simulation(RunConfig::<f64> {
            alpha,
            beta,
            t_final: 0.05,
            ..RunConfig::with_width(2e-2)
        })
        .unwrap();
        prop_assert!(out.summary.var >= 0.0 && out.summary.var.is_finite());
    }
}
