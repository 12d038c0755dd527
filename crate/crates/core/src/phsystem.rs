//! Discrete port-Hamiltonian Burgers system.
//!
//! The state is the interior coefficient vector `v` of the velocity. Everything
//! else is eliminated through linear constitutive solves:
//!
//! ```text
//! M e   = N(v)                 co-state, L²-projection of v²/2
//! M̄ f_r = R̄ᵀ e                 dissipative flow
//! W̄(v) e_r = ν M̄ f_r           dissipative effort
//! M dv/dt = D e − R̄ e_r + B_ℓ u_ℓ + B_r u_r
//! ```
//!
//! `e` vanishes on the boundary. `f_r` and `e_r` are expanded on all nodes;
//! barred matrices act on that space, and `R̄ e_r` keeps only the interior rows.
//!
//! `D` is skew-symmetric, so the Hamiltonian `∫ v_d³/6` is conserved by the
//! semi-discrete inviscid flow and decays at rate `(1/ν)∫ v_d e_rd²` in the
//! viscous one.

use crate::banded::{BandLu, BandMatrix};
use crate::error::StepFailure;
use crate::fem1d::{assemble_nodal_weighted_mass, assemble_quadratic_load, FeOperators};
use crate::scalar::{dot, Real};

/// Relative pivot threshold for the `W̄(v)` factorization.
pub const WEIGHTED_MASS_PIVOT_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode<T> {
    Inviscid,
    Viscous { nu: T },
}

impl<T: Real> Mode<T> {
    /// `ν = β h / α`; `β = 0` selects the inviscid system.
    pub fn from_scaling(alpha: T, beta: T, h: T) -> Self {
        if beta == T::zero() {
            Mode::Inviscid
        } else {
            Mode::Viscous {
                nu: beta * h / alpha,
            }
        }
    }

    pub fn viscosity(&self) -> Option<T> {
        match *self {
            Mode::Inviscid => None,
            Mode::Viscous { nu } => Some(nu),
        }
    }

    pub fn is_viscous(&self) -> bool {
        matches!(self, Mode::Viscous { .. })
    }
}

/// Port values of the boundary and dissipative-boundary ports.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PortValues<T> {
    pub u_left: T,
    pub u_right: T,
    pub y_left: T,
    pub y_right: T,
    pub u_visc_left: T,
    pub u_visc_right: T,
    pub y_visc_left: T,
    pub y_visc_right: T,
}

impl<T: Real> PortValues<T> {
    pub fn zero() -> Self {
        Self::default()
    }
}

/// Dissipative port pair (all nodes) together with the factorized `W̄(v)` that produced it.
#[derive(Debug, Clone)]
pub struct ViscousPorts<T> {
    pub f_r: Vec<T>,
    pub e_r: Vec<T>,
    pub weighted: BandMatrix<T>,
    pub weighted_lu: BandLu<T>,
}

/// A point of the discrete system with all dependent variables resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct State<T> {
    pub t: T,
    pub v: Vec<T>,
    pub e: Vec<T>,
    /// All-node coefficients; empty in inviscid mode.
    pub f_r: Vec<T>,
    /// All-node coefficients; empty in inviscid mode.
    pub e_r: Vec<T>,
    pub mode: Mode<T>,
}

impl<T: Real> State<T> {
    /// Resolves `e`, `f_r`, `e_r` from `v` through the constitutive relations.
    pub fn consistent(
        ops: &FeOperators<T>,
        t: T,
        v: Vec<T>,
        mode: Mode<T>,
    ) -> Result<Self, StepFailure> {
        let e = project_costate(ops, &v);
        let (f_r, e_r) = match mode {
            Mode::Inviscid => (Vec::new(), Vec::new()),
            Mode::Viscous { nu } => {
                let ports = solve_viscous_ports(ops, &v, &e, nu)?;
                (ports.f_r, ports.e_r)
            }
        };
        Ok(Self {
            t,
            v,
            e,
            f_r,
            e_r,
            mode,
        })
    }

    /// `D e − R̄ e_r`, the interior part of `M dv/dt` under zero controls.
    pub fn effort_flow(&self, ops: &FeOperators<T>) -> Vec<T> {
        interior_flow(ops, &self.e, &self.e_r)
    }
}

/// `e` solving `M e = N(v)`: the Galerkin projection of `v_d²/2`.
pub fn project_costate<T: Real>(ops: &FeOperators<T>, v: &[T]) -> Vec<T> {
    ops.solve_mass(&assemble_quadratic_load(&ops.mesh, v))
}

/// Solves `M̄ f_r = R̄ᵀ e` and `W̄(v) e_r = ν M̄ f_r`.
pub fn solve_viscous_ports<T: Real>(
    ops: &FeOperators<T>,
    v: &[T],
    e: &[T],
    nu: T,
) -> Result<ViscousPorts<T>, StepFailure> {
    let weighted = assemble_nodal_weighted_mass(&ops.mesh, v);
    let weighted_lu = weighted
        .lu(T::lit(WEIGHTED_MASS_PIVOT_TOL))
        .map_err(|p| StepFailure::SingularWeightedMass {
            pivot: p.pivot.to_f64_lossy(),
            threshold: p.threshold.to_f64_lossy(),
        })?;
    let load = ops.dissipative_load(e);
    let f_r = ops.solve_nodal_mass(&load);
    let rhs: Vec<T> = load.into_iter().map(|x| nu * x).collect();
    let e_r = weighted_lu.solve(&rhs);
    Ok(ViscousPorts {
        f_r,
        e_r,
        weighted,
        weighted_lu,
    })
}

/// `D e − R̄ e_r`; an empty `e_r` means the inviscid system.
pub fn interior_flow<T: Real>(ops: &FeOperators<T>, e: &[T], e_r: &[T]) -> Vec<T> {
    let mut g = ops.d.matvec(e);
    if !e_r.is_empty() {
        let re = ops.dissipative_divergence(e_r);
        for (gi, ri) in g.iter_mut().zip(re) {
            *gi -= ri;
        }
    }
    g
}

/// Time derivative of the coefficients: `w` with `M w = D e − R̄ e_r + B_ℓ u_ℓ + B_r u_r`.
///
/// The boundary vectors vanish on interior indices, so the controls do not
/// enter the interior dynamics of the H¹₀ expansion.
pub fn rhs<T: Real>(ops: &FeOperators<T>, state: &State<T>, ports: &PortValues<T>) -> Vec<T> {
    let n = ops.n_dofs();
    let mut g = state.effort_flow(ops);
    let bl = ops.b_left.interior(n);
    let br = ops.b_right.interior(n);
    for i in 0..n {
        g[i] += bl[i] * ports.u_left + br[i] * ports.u_right;
    }
    ops.solve_mass(&g)
}

/// Port outputs of a consistent state. `e_d` vanishes on the boundary, so the
/// convective outputs are zero; the dissipative ones read the traces of `e_rd`.
pub fn outputs<T: Real>(ops: &FeOperators<T>, state: &State<T>) -> PortValues<T> {
    let e_l = ops.mesh.eval(&state.e, T::zero());
    let e_rr = ops.mesh.eval(&state.e, T::one());
    let (er_l, er_r) = match state.e_r.as_slice() {
        [] => (T::zero(), T::zero()),
        [first, .., last] => (*first, *last),
        [only] => (*only, *only),
    };
    outputs_from_traces(ops, &PortValues::zero(), (e_l, e_rr), (er_l, er_r))
}

/// Output rows of the block system, for efforts with given boundary traces:
/// `2 y = Bᵀ e` on the convective ports, `y^ν = (B^ν)ᵀ e_r` on the dissipative ones.
pub fn outputs_from_traces<T: Real>(
    ops: &FeOperators<T>,
    controls: &PortValues<T>,
    e_traces: (T, T),
    e_r_traces: (T, T),
) -> PortValues<T> {
    let half = T::lit(0.5);
    let (e0, e1) = e_traces;
    let (r0, r1) = e_r_traces;
    PortValues {
        y_left: half * ops.b_left.pair_traces(e0, e1),
        y_right: half * ops.b_right.pair_traces(e0, e1),
        y_visc_left: ops.b_visc_left.pair_traces(r0, r1),
        y_visc_right: ops.b_visc_right.pair_traces(r0, r1),
        ..*controls
    }
}

/// Efforts of the full block system: `(e, e_r, u_ℓ, u_r, u^ν_ℓ, u^ν_r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockEfforts<T> {
    pub e: Vec<T>,
    pub e_r: Vec<T>,
    pub controls: [T; 4],
}

/// Metric-weighted flows `𝐌·(dv/dt, f_r, −y_ℓ, −y_r, −y^ν_ℓ, −y^ν_r)` with
/// `𝐌 = Diag(M, M, 2, 2, 1, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedFlows<T> {
    pub v_rate: Vec<T>,
    pub f_r: Vec<T>,
    pub ports: [T; 4],
}

/// Applies the skew-symmetric interconnection matrix of the viscous system.
/// `e` is interior, `e_r` all-node.
pub fn apply_interconnection<T: Real>(ops: &FeOperators<T>, x: &BlockEfforts<T>) -> WeightedFlows<T> {
    let n = ops.n_dofs();
    let [ul, ur, uvl, uvr] = x.controls;
    let (bl, br) = (ops.b_left.interior(n), ops.b_right.interior(n));
    let (bvl, bvr) = (ops.b_visc_left.extended(n), ops.b_visc_right.extended(n));

    let mut v_rate = interior_flow(ops, &x.e, &x.e_r);
    for i in 0..n {
        v_rate[i] += bl[i] * ul + br[i] * ur;
    }
    let mut f_r = ops.dissipative_load(&x.e);
    for a in 0..n + 2 {
        f_r[a] += bvl[a] * uvl + bvr[a] * uvr;
    }
    WeightedFlows {
        v_rate,
        f_r,
        ports: [
            -dot(&bl, &x.e),
            -dot(&br, &x.e),
            -dot(&bvl, &x.e_r),
            -dot(&bvr, &x.e_r),
        ],
    }
}

/// Symmetrized power pairing of two points of the discrete Dirac structure.
/// Vanishes identically because the interconnection matrix is skew-symmetric.
pub fn power_pairing<T: Real>(ops: &FeOperators<T>, a: &BlockEfforts<T>, b: &BlockEfforts<T>) -> T {
    let fa = apply_interconnection(ops, a);
    let fb = apply_interconnection(ops, b);
    let half = |f: &WeightedFlows<T>, x: &BlockEfforts<T>| {
        dot(&f.v_rate, &x.e)
            + dot(&f.f_r, &x.e_r)
            + f.ports.iter().zip(&x.controls).map(|(&p, &u)| p * u).sum::<T>()
    };
    half(&fa, b) + half(&fb, a)
}
