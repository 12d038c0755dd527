//! Fast self-checks of the discrete structure and the analytic oracles, run by
//! the `verify` subcommand.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::diagnostics::{
    characteristics_solution, hamiltonian, kinetic_energy, rankine_hugoniot_speed, shock_dissipation,
    shock_formation_time, GaussianPulse, InitialProfile,
};
use crate::fem1d::{assemble_nodal_weighted_mass, assemble_operators, assemble_quadratic_load, build_mesh, FeOperators};
use crate::integrator::{cn_residual, jacobian_apply, TrialPoint};
use crate::phsystem::{apply_interconnection, power_pairing, BlockEfforts, Mode, State};
use crate::scalar::{dot, norm_max};

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Self { name, passed, detail }
    }
}

fn ops(n: usize) -> FeOperators<f64> {
    assemble_operators(&build_mesh(n).expect("positive element count")).expect("mass matrix is SPD")
}

/// Smooth positive random velocity: a few random sine modes on a positive offset.
pub fn random_positive_state(ops: &FeOperators<f64>, rng: &mut StdRng) -> Vec<f64> {
    let modes: Vec<(f64, f64)> = (1..=4).map(|k| (rng.gen_range(-0.2..0.2), k as f64)).collect();
    let offset = rng.gen_range(0.5..1.5);
    ops.mesh.interpolate(|x: f64| {
        offset + modes.iter().map(|&(a, k)| a * (k * std::f64::consts::PI * x).sin()).sum::<f64>()
    })
}

fn skew_structure() -> Check {
    let mut worst = 0.0f64;
    let mut cholesky_ok = true;
    for n in [1, 2, 7, 100] {
        match build_mesh::<f64>(n).and_then(|m| assemble_operators(&m)) {
            Ok(o) => {
                let scale = o.d.max_abs().max(f64::MIN_POSITIVE);
                let skew = o.d.add_scaled(1.0, &o.d.transpose()).max_abs() / scale;
                let r = o.r.add_scaled(-1.0, &o.d.transpose()).max_abs() / scale;
                worst = worst.max(skew).max(r);
            }
            Err(_) => cholesky_ok = false,
        }
    }
    Check::new(
        "skew_structure",
        cholesky_ok && worst <= 1e-14,
        format!("max relative |D + Dᵀ|, |R − Dᵀ| = {worst:.2e}; mass Cholesky ok = {cholesky_ok}"),
    )
}

fn costate_projection() -> Check {
    let mut rng = StdRng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for n in [3, 10] {
        let o = ops(n);
        for _ in 0..10 {
            let v = random_positive_state(&o, &mut rng);
            let s = State::consistent(&o, 0.0, v.clone(), Mode::Inviscid).expect("inviscid state");
            let load = assemble_quadratic_load(&o.mesh, &v);
            let res: Vec<f64> = o.mass.matvec(&s.e).iter().zip(&load).map(|(a, b)| a - b).collect();
            worst = worst.max(norm_max(&res) / norm_max(&load));
        }
    }
    Check::new("costate_projection", worst <= 1e-12, format!("max relative residual {worst:.2e}"))
}

fn semidiscrete_power_balance() -> Check {
    let mut rng = StdRng::seed_from_u64(11);
    let o = ops(40);
    let mut worst_inv = 0.0f64;
    let mut worst_visc = 0.0f64;
    for _ in 0..20 {
        let v = random_positive_state(&o, &mut rng);
        let inv = State::consistent(&o, 0.0, v.clone(), Mode::Inviscid).expect("inviscid state");
        let p = dot(&inv.e, &inv.effort_flow(&o));
        worst_inv = worst_inv.max(p.abs() / (dot(&inv.e, &inv.e).sqrt() * dot(&v, &v).sqrt()));

        let nu = rng.gen_range(1e-3..5e-2);
        let vis = State::consistent(&o, 0.0, v.clone(), Mode::Viscous { nu }).expect("viscous state");
        let p = dot(&vis.e, &vis.effort_flow(&o));
        let w = assemble_nodal_weighted_mass(&o.mesh, &v);
        let q = dot(&vis.e_r, &w.matvec(&vis.e_r)) / nu;
        worst_visc = worst_visc.max((p + q).abs() / q.abs().max(f64::MIN_POSITIVE));
    }
    Check::new(
        "semidiscrete_power_balance",
        worst_inv <= 1e-12 && worst_visc <= 1e-10,
        format!("inviscid {worst_inv:.2e}, viscous {worst_visc:.2e}"),
    )
}

fn dirac_pairing() -> Check {
    let mut rng = StdRng::seed_from_u64(13);
    let o = ops(9);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect() };
        let a = BlockEfforts {
            e: draw(o.n_dofs()),
            e_r: draw(o.n_nodes()),
            controls: [0.3, -0.2, 0.7, 0.1],
        };
        let b = BlockEfforts {
            e: draw(o.n_dofs()),
            e_r: draw(o.n_nodes()),
            controls: [-0.5, 0.4, 0.2, -0.9],
        };
        let scale = norm_max(&apply_interconnection(&o, &a).v_rate).max(1.0);
        worst = worst.max(power_pairing(&o, &a, &b).abs() / scale);
    }
    Check::new("dirac_pairing", worst <= 1e-12, format!("max |pairing| {worst:.2e}"))
}

fn jacobian_finite_differences() -> Check {
    let mut rng = StdRng::seed_from_u64(17);
    let o = ops(12);
    let mode = Mode::Viscous { nu: 0.02 };
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let v0 = random_positive_state(&o, &mut rng);
        let state = State::consistent(&o, 0.0, v0, mode).expect("viscous state");
        let v1 = random_positive_state(&o, &mut rng);
        let trial = TrialPoint::evaluate(&o, &v1, mode).expect("positive trial");
        let w: Vec<f64> = (0..o.n_dofs()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let dt = 0.01;
        let jw = jacobian_apply(&o, &trial, dt, &w);
        let eps = 1e-6;
        let shift = |s: f64| -> Vec<f64> { v1.iter().zip(&w).map(|(a, b)| a + s * b).collect() };
        let fp = cn_residual(&o, &state, &shift(eps), dt).expect("trial");
        let fm = cn_residual(&o, &state, &shift(-eps), dt).expect("trial");
        let err: Vec<f64> = jw
            .iter()
            .zip(fp.iter().zip(&fm))
            .map(|(j, (p, m))| j - (p - m) / (2.0 * eps))
            .collect();
        worst = worst.max(norm_max(&err) / norm_max(&jw));
    }
    Check::new("jacobian_fd", worst <= 1e-6, format!("max relative deviation {worst:.2e}"))
}

/// `(1/6)∫₀¹ exp(−150(x−½)²)` and `(1/2)∫₀¹ exp(−100(x−½)²)`: the Gaussian
/// integrals over the line; the tails beyond `[0, 1]` are below `1e-12`.
pub fn gaussian_functionals() -> (f64, f64) {
    let pi = std::f64::consts::PI;
    ((pi / 150.0).sqrt() / 6.0, 0.5 * (pi / 100.0).sqrt())
}

fn initial_functionals() -> Check {
    let mesh = build_mesh::<f64>(1000).expect("mesh");
    let g = GaussianPulse::default();
    let v = mesh.interpolate(|x| g.value(x));
    let (h_ref, e_ref) = gaussian_functionals();
    let (h0, e0) = (hamiltonian(&mesh, &v), kinetic_energy(&mesh, &v));
    let err = (h0 - h_ref).abs().max((e0 - e_ref).abs());
    Check::new(
        "initial_functionals",
        err <= 1e-6,
        format!("H = {h0:.6e} (ref {h_ref:.6e}), E = {e0:.6e} (ref {e_ref:.6e})"),
    )
}

fn characteristics_oracles() -> Check {
    let g = GaussianPulse::<f64>::default();
    let t_star = shock_formation_time(&g).map(|s| s.time).unwrap_or(f64::NAN);
    let exact = 0.5f64.exp() / 10.0;
    let mut worst = 0.0f64;
    for k in 0..=200 {
        let x = k as f64 / 200.0;
        if let Ok(v) = characteristics_solution(&g, 0.1, x) {
            // v = v₀(ξ) with ξ = x − t v
            worst = worst.max((g.value(x - 0.1 * v) - v).abs());
        } else {
            worst = f64::INFINITY;
        }
    }
    let rh = rankine_hugoniot_speed(1.0f64, 0.0);
    let sd = shock_dissipation(1.0f64, 0.0);
    let ok = (t_star - exact).abs() <= 1e-9
        && worst <= 1e-12
        && rh == 0.5
        && (sd.kinetic + 1.0 / 12.0).abs() <= 1e-15
        && (sd.hamiltonian + 1.0 / 24.0).abs() <= 1e-15;
    Check::new(
        "characteristics_oracles",
        ok,
        format!("t* = {t_star:.9} (ref {exact:.9}), implicit residual {worst:.2e}, RH(1,0) = {rh}"),
    )
}

/// Every check, in a fixed order.
pub fn run_suite() -> Vec<Check> {
    vec![
        skew_structure(),
        costate_projection(),
        semidiscrete_power_balance(),
        dirac_pairing(),
        jacobian_finite_differences(),
        initial_functionals(),
        characteristics_oracles(),
    ]
}
