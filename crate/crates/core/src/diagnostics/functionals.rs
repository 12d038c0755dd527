use crate::fem1d::Mesh1D;
use crate::phsystem::{Mode, State};
use crate::scalar::Real;

/// `H(v) = ∫ v_d³ / 6`. Not sign-definite.
pub fn hamiltonian<T: Real>(mesh: &Mesh1D<T>, v: &[T]) -> T {
    let sixth = T::one() / T::lit(6.0);
    mesh.integrate_fields(&[v], |s| {
        let x = s.values[0];
        x * x * x * sixth
    })
}

/// `E(v) = ∫ v_d² / 2`.
pub fn kinetic_energy<T: Real>(mesh: &Mesh1D<T>, v: &[T]) -> T {
    let half = T::lit(0.5);
    mesh.integrate_fields(&[v], |s| half * s.values[0] * s.values[0])
}

/// Hamiltonian dissipation rate `q_H = (1/ν) ∫ v_d e_rd²` and kinetic
/// dissipation rate `q_E = ν ∫ (∂ₓ v_d)²`. Both are zero in inviscid mode.
///
/// `q_H` carries no sign guarantee; `q_E` is non-negative.
pub fn dissipation_rates<T: Real>(mesh: &Mesh1D<T>, state: &State<T>) -> (T, T) {
    match state.mode {
        Mode::Inviscid => (T::zero(), T::zero()),
        Mode::Viscous { nu } => {
            let q_h = mesh.integrate_fields(&[&state.v, &state.e_r], |s| {
                s.values[0] * s.values[1] * s.values[1]
            }) / nu;
            let q_e = nu * mesh.integrate_fields(&[&state.v], |s| s.slopes[0] * s.slopes[0]);
            (q_h, q_e)
        }
    }
}

/// `‖v_d − f‖_{L²(0,1)}` for an arbitrary reference function `f`.
pub fn l2_distance<T: Real>(mesh: &Mesh1D<T>, v: &[T], f: impl Fn(T) -> T) -> T {
    mesh.integrate_fields(&[v], |s| {
        let d = s.values[0] - f(s.x);
        d * d
    })
    .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem1d::build_mesh;

    #[test]
    fn functionals_of_zero() {
        let mesh = build_mesh::<f64>(5).unwrap();
        let v = vec![0.0; mesh.n_dofs()];
        assert_eq!(hamiltonian(&mesh, &v), 0.0);
        assert_eq!(kinetic_energy(&mesh, &v), 0.0);
    }

    #[test]
    fn odd_profile_has_zero_hamiltonian() {
        let mesh = build_mesh::<f64>(10).unwrap();
        let v = mesh.interpolate(|x| (2.0 * std::f64::consts::PI * x).sin());
        assert!(hamiltonian(&mesh, &v).abs() < 1e-14);
    }

    #[test]
    fn kinetic_energy_is_quadratic() {
        let mesh = build_mesh::<f64>(6).unwrap();
        let v = mesh.interpolate(|x| x * (1.0 - x) + 0.3 * (9.0 * x).sin());
        let v2: Vec<f64> = v.iter().map(|x| 2.0 * x).collect();
        let e1 = kinetic_energy(&mesh, &v);
        assert!(e1 > 0.0);
        assert!((kinetic_energy(&mesh, &v2) - 4.0 * e1).abs() < 1e-14);
    }

    #[test]
    fn inviscid_rates_are_zero() {
        let mesh = build_mesh::<f64>(3).unwrap();
        let state = State {
            t: 0.0,
            v: vec![1.0; mesh.n_dofs()],
            e: vec![0.5; mesh.n_dofs()],
            f_r: vec![],
            e_r: vec![],
            mode: Mode::Inviscid,
        };
        assert_eq!(dissipation_rates(&mesh, &state), (0.0, 0.0));
    }
}
