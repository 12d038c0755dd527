//! Crank–Nicolson time stepping with Newton's method and adaptive step control.
//!
//! One step solves, for the trial coefficients `v`,
//!
//! ```text
//! F(v) = M (v − vₙ) − dt/2 · [ g(v) + g(vₙ) ] = 0,    g = D e − R̄ e_r,
//! ```
//!
//! with `e(v)` and `e_r(v)` fixed by the constitutive relations. Newton runs on
//! the coupled equations in `(v, e, e_r)`, interleaved per node so that the
//! Jacobian stays banded.

use crate::banded::BandMatrix;
use crate::diagnostics::{balance_variation, GaussianPulse, InitialProfile, PowerLedger};
use crate::error::{Error, Result, StepFailure};
use crate::fem1d::{
    assemble_nodal_weighted_mass, assemble_operators, assemble_quadratic_load, build_mesh, FeOperators, HALF_BANDWIDTH,
};
use crate::phsystem::{interior_flow, project_costate, solve_viscous_ports, Mode, State};
use crate::scalar::{norm2, Real};

const JACOBIAN_PIVOT_TOL: f64 = 1e-16;

/// Everything that defines one simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig<T> {
    pub n_elems: usize,
    /// Initial step multiplier: `dt₀ = α h`.
    pub alpha: T,
    /// Viscosity multiplier: `ν = β h / α`; zero selects the inviscid system.
    pub beta: T,
    pub t_final: T,
    /// Relative Newton residual tolerance.
    pub newton_tol: T,
    pub newton_max_iter: usize,
    /// `dt_min = dt₀ · dt_min_factor`
    pub dt_min_factor: T,
    pub shrink_factor: T,
    pub grow_factor: T,
    /// Consecutive easy acceptances required before growing `dt`.
    pub grow_after: usize,
    /// A step counts as easy when Newton needed at most this many iterations.
    pub easy_newton_iters: usize,
    /// `dt_cap = dt₀ · dt_cap_factor`
    pub dt_cap_factor: T,
    /// Number of uniformly spaced snapshot times after `t = 0`.
    pub snapshots: usize,
    /// Disables adaptation and steps with this `dt`.
    pub fixed_dt: Option<T>,
    /// Rejects viscous steps whose end state has an indefinite `W̄(v)`.
    pub require_definite_weight: bool,
}

impl<T: Real> Default for RunConfig<T> {
    fn default() -> Self {
        Self {
            n_elems: 100,
            alpha: T::one(),
            beta: T::one(),
            t_final: T::lit(0.4),
            newton_tol: T::lit(1e-8),
            newton_max_iter: 12,
            dt_min_factor: T::lit(2f64.powi(-12)),
            shrink_factor: T::lit(0.5),
            grow_factor: T::lit(1.5),
            grow_after: 5,
            easy_newton_iters: 3,
            dt_cap_factor: T::lit(2.0),
            snapshots: 50,
            fixed_dt: None,
            require_definite_weight: true,
        }
    }
}

impl<T: Real> RunConfig<T> {
    /// Default configuration on the mesh whose width is closest to `h`.
    pub fn with_width(h: T) -> Self {
        let n = (T::one() / h).round().to_usize().unwrap_or(1).max(1);
        Self {
            n_elems: n,
            ..Self::default()
        }
    }

    pub fn h(&self) -> T {
        T::one() / T::from_count(self.n_elems)
    }

    pub fn dt0(&self) -> T {
        self.alpha * self.h()
    }

    pub fn dt_min(&self) -> T {
        self.dt0() * self.dt_min_factor
    }

    pub fn dt_cap(&self) -> T {
        self.dt0() * self.dt_cap_factor
    }

    pub fn mode(&self) -> Mode<T> {
        Mode::from_scaling(self.alpha, self.beta, self.h())
    }

    pub fn nu(&self) -> Option<T> {
        self.mode().viscosity()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.n_elems == 0 {
            return bad("n_elems must be positive");
        }
        if !(self.alpha > T::zero()) {
            return bad("alpha must be positive");
        }
        if !(self.beta >= T::zero()) {
            return bad("beta must be non-negative");
        }
        if !(self.t_final >= T::zero()) {
            return bad("t_final must be non-negative");
        }
        if !(self.newton_tol > T::zero()) || self.newton_max_iter == 0 {
            return bad("Newton tolerance and iteration cap must be positive");
        }
        if !(self.dt_min_factor > T::zero() && self.dt_min_factor <= T::one()) {
            return bad("dt_min_factor must lie in (0, 1]");
        }
        if !(self.shrink_factor > T::zero() && self.shrink_factor < T::one()) {
            return bad("shrink factor must lie in (0, 1)");
        }
        if !(self.grow_factor >= T::one()) || !(self.dt_cap_factor >= T::one()) {
            return bad("growth factor and dt cap factor must be >= 1");
        }
        if let Some(dt) = self.fixed_dt {
            if !(dt > T::zero()) {
                return bad("fixed dt must be positive");
            }
        }
        Ok(())
    }
}

/// Constitutive data at a Newton trial point.
#[derive(Debug, Clone)]
pub struct TrialPoint<T> {
    pub v: Vec<T>,
    pub e: Vec<T>,
    pub f_r: Vec<T>,
    pub e_r: Vec<T>,
    /// `D e − R̄ e_r`
    pub flow: Vec<T>,
    /// `W̄(v)` over all nodes; its LU lives in `ports` for viscous trials.
    weighted: BandMatrix<T>,
    ports: Option<crate::phsystem::ViscousPorts<T>>,
    mode: Mode<T>,
}

impl<T: Real> TrialPoint<T> {
    pub fn evaluate(ops: &FeOperators<T>, v: &[T], mode: Mode<T>) -> Result<Self, StepFailure> {
        let e = project_costate(ops, v);
        let (f_r, e_r, weighted, ports) = match mode {
            Mode::Inviscid => (Vec::new(), Vec::new(), assemble_nodal_weighted_mass(&ops.mesh, v), None),
            Mode::Viscous { nu } => {
                let p = solve_viscous_ports(ops, v, &e, nu)?;
                (p.f_r.clone(), p.e_r.clone(), p.weighted.clone(), Some(p))
            }
        };
        let flow = interior_flow(ops, &e, &e_r);
        Ok(Self {
            v: v.to_vec(),
            e,
            f_r,
            e_r,
            flow,
            weighted,
            ports,
            mode,
        })
    }

    pub fn into_state(self, t: T) -> State<T> {
        State {
            t,
            v: self.v,
            e: self.e,
            f_r: self.f_r,
            e_r: self.e_r,
            mode: self.mode,
        }
    }
}

/// `F(v_trial)` for one Crank–Nicolson step from `state_n`.
pub fn cn_residual<T: Real>(
    ops: &FeOperators<T>,
    state_n: &State<T>,
    v_trial: &[T],
    dt: T,
) -> Result<Vec<T>, StepFailure> {
    let trial = TrialPoint::evaluate(ops, v_trial, state_n.mode)?;
    Ok(residual_at(ops, state_n, &state_n.effort_flow(ops), &trial, dt))
}

fn residual_at<T: Real>(
    ops: &FeOperators<T>,
    state_n: &State<T>,
    flow_n: &[T],
    trial: &TrialPoint<T>,
    dt: T,
) -> Vec<T> {
    let diff: Vec<T> = trial.v.iter().zip(&state_n.v).map(|(&a, &b)| a - b).collect();
    let mut f = ops.mass.matvec(&diff);
    let half_dt = T::lit(0.5) * dt;
    for ((fi, &g1), &g0) in f.iter_mut().zip(&trial.flow).zip(flow_n) {
        *fi -= half_dt * (g1 + g0);
    }
    f
}

/// Interior rows of `A · ext(x)` for an all-node matrix `A` and interior `x`.
fn interior_rows<T: Real>(ops: &FeOperators<T>, a: &BandMatrix<T>, x: &[T]) -> Vec<T> {
    let full = a.matvec(&ops.mesh.extend_with_boundary(x));
    full[1..full.len() - 1].to_vec()
}

/// `J w` for the Jacobian of [`cn_residual`] at `trial`, by chained linear solves:
///
/// ```text
/// δe   = M⁻¹ W(v) w
/// δe_r = W̄(v)⁻¹ (ν R̄ᵀ δe − W̄(e_r) w)
/// J w  = M w − dt/2 (D δe − R̄ δe_r)
/// ```
pub fn jacobian_apply<T: Real>(ops: &FeOperators<T>, trial: &TrialPoint<T>, dt: T, w: &[T]) -> Vec<T> {
    let de = ops.solve_mass(&interior_rows(ops, &trial.weighted, w));
    let der = match (&trial.ports, trial.mode) {
        (Some(ports), Mode::Viscous { nu }) => {
            let w_er = assemble_nodal_weighted_mass(&ops.mesh, &trial.e_r);
            let a = ops.dissipative_load(&de);
            let b = w_er.matvec(&ops.mesh.extend_with_boundary(w));
            let rhs: Vec<T> = a.iter().zip(&b).map(|(&x, &y)| nu * x - y).collect();
            ports.weighted_lu.solve(&rhs)
        }
        _ => Vec::new(),
    };
    let g = interior_flow(ops, &de, &der);
    let mut out = ops.mass.matvec(w);
    let half_dt = T::lit(0.5) * dt;
    for (o, gi) in out.iter_mut().zip(g) {
        *o -= half_dt * gi;
    }
    out
}

/// Position of each unknown in the interleaved coupled system.
///
/// Viscous systems carry `(v, e, e_r)` on every node, with identity rows for
/// the boundary values of `v` and `e`; inviscid ones carry `(v, e)` on the
/// interior nodes only.
#[derive(Debug, Clone, Copy)]
struct Layout {
    n: usize,
    viscous: bool,
}

impl Layout {
    fn new(n: usize, viscous: bool) -> Self {
        Self { n, viscous }
    }
    fn block(&self) -> usize {
        if self.viscous {
            3
        } else {
            2
        }
    }
    fn dim(&self) -> usize {
        if self.viscous {
            3 * (self.n + 2)
        } else {
            2 * self.n
        }
    }
    fn band(&self) -> usize {
        self.block() * HALF_BANDWIDTH + self.block() - 1
    }
    /// `v` of interior dof `i`.
    fn v(&self, i: usize) -> usize {
        if self.viscous {
            3 * (i + 1)
        } else {
            2 * i
        }
    }
    fn e(&self, i: usize) -> usize {
        self.v(i) + 1
    }
    /// `e_r` of node `a`.
    fn e_r(&self, a: usize) -> usize {
        3 * a + 2
    }
}

/// Jacobian of the coupled step residual in the unknowns `(v, e, e_r)`,
/// interleaved per node so that it stays banded:
///
/// ```text
/// [ M        −dt/2 D   dt/2 R̄ ]
/// [ −W(v)    M         0      ]
/// [ W̄(e_r)   −ν R̄ᵀ     W̄(v)   ]
/// ```
///
/// `weighted` is `W̄(v)` over all nodes. Inviscid systems drop the last block
/// row and column.
pub fn coupled_jacobian<T: Real>(
    ops: &FeOperators<T>,
    weighted: &BandMatrix<T>,
    e_r: &[T],
    dt: T,
    mode: Mode<T>,
) -> BandMatrix<T> {
    let n = ops.n_dofs();
    let lay = Layout::new(n, mode.is_viscous());
    let mut a = BandMatrix::zeros(lay.dim(), lay.band(), lay.band());
    let half_dt = T::lit(0.5) * dt;
    for i in 0..n {
        for j in ops.mass.row_range(i) {
            a.add(lay.v(i), lay.v(j), ops.mass.get(i, j));
            a.add(lay.v(i), lay.e(j), -half_dt * ops.d.get(i, j));
            a.add(lay.e(i), lay.v(j), -weighted.get(i + 1, j + 1));
            a.add(lay.e(i), lay.e(j), ops.mass.get(i, j));
        }
    }
    if let Mode::Viscous { nu } = mode {
        let nodes = ops.n_nodes();
        let w_er = assemble_nodal_weighted_mass(&ops.mesh, e_r);
        for i in 0..n {
            for b in ops.r_nodal.row_range(i + 1) {
                a.add(lay.v(i), lay.e_r(b), half_dt * ops.r_nodal.get(i + 1, b));
            }
        }
        for row in 0..nodes {
            for b in weighted.row_range(row) {
                a.add(lay.e_r(row), lay.e_r(b), weighted.get(row, b));
                if b > 0 && b + 1 < nodes {
                    let j = b - 1;
                    a.add(lay.e_r(row), lay.v(j), w_er.get(row, b));
                    a.add(lay.e_r(row), lay.e(j), -nu * ops.r_nodal.get(b, row));
                }
            }
        }
        for boundary in [0, nodes - 1] {
            a.set(3 * boundary, 3 * boundary, T::one());
            a.set(3 * boundary + 1, 3 * boundary + 1, T::one());
        }
    }
    a
}

/// Solves `J δ = rhs` for the Jacobian of [`cn_residual`]: the `δv` block of
/// [`coupled_jacobian`] with right-hand side `(rhs, 0, 0)` is its Schur complement.
pub fn newton_direction<T: Real>(
    ops: &FeOperators<T>,
    trial: &TrialPoint<T>,
    dt: T,
    rhs: &[T],
) -> Result<Vec<T>, StepFailure> {
    let n = ops.n_dofs();
    let lay = Layout::new(n, trial.mode.is_viscous());
    let a = coupled_jacobian(ops, &trial.weighted, &trial.e_r, dt, trial.mode);
    let lu = a
        .lu(T::lit(JACOBIAN_PIVOT_TOL))
        .map_err(|p| StepFailure::SingularJacobian { row: p.row })?;
    let mut z = vec![T::zero(); lay.dim()];
    for i in 0..n {
        z[lay.v(i)] = rhs[i];
    }
    lu.solve_in_place(&mut z);
    Ok((0..n).map(|i| z[lay.v(i)]).collect())
}

/// Residual blocks of one step in the unknowns `(v, e, e_r)`:
///
/// ```text
/// r_v  = M (v − vₙ) − dt/2 [ (D e − R̄ e_r) + gₙ ]
/// r_e  = M e − N(v)
/// r_er = W̄(v) e_r − ν R̄ᵀ e
/// ```
#[derive(Debug, Clone)]
pub struct CoupledResidual<T> {
    pub r_v: Vec<T>,
    pub r_e: Vec<T>,
    /// All nodes; empty in inviscid mode.
    pub r_er: Vec<T>,
    weighted: BandMatrix<T>,
}

pub fn coupled_residual<T: Real>(
    ops: &FeOperators<T>,
    state_n: &State<T>,
    flow_n: &[T],
    dt: T,
    v: &[T],
    e: &[T],
    e_r: &[T],
) -> CoupledResidual<T> {
    let half_dt = T::lit(0.5) * dt;
    let diff: Vec<T> = v.iter().zip(&state_n.v).map(|(&a, &b)| a - b).collect();
    let mut r_v = ops.mass.matvec(&diff);
    for ((ri, g1), &g0) in r_v.iter_mut().zip(interior_flow(ops, e, e_r)).zip(flow_n) {
        *ri -= half_dt * (g1 + g0);
    }
    let mut r_e = ops.mass.matvec(e);
    for (ri, ni) in r_e.iter_mut().zip(assemble_quadratic_load(&ops.mesh, v)) {
        *ri -= ni;
    }
    let weighted = assemble_nodal_weighted_mass(&ops.mesh, v);
    let r_er = match state_n.mode {
        Mode::Viscous { nu } => {
            let mut r = weighted.matvec(e_r);
            for (ri, si) in r.iter_mut().zip(ops.dissipative_load(e)) {
                *ri -= nu * si;
            }
            r
        }
        Mode::Inviscid => Vec::new(),
    };
    CoupledResidual { r_v, r_e, r_er, weighted }
}

/// Reference magnitudes the residual blocks are measured against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualScales<T> {
    /// `max(‖F(vₙ)‖, ‖M vₙ‖)` with `F(vₙ) = −dt gₙ`
    pub flow: T,
    /// `‖N(vₙ)‖`
    pub costate: T,
}

impl<T: Real> ResidualScales<T> {
    pub fn at(ops: &FeOperators<T>, state_n: &State<T>, flow_n: &[T], dt: T) -> Self {
        Self {
            flow: (dt * norm2(flow_n)).max(norm2(&ops.mass.matvec(&state_n.v))),
            costate: norm2(&assemble_quadratic_load(&ops.mesh, &state_n.v)),
        }
    }

    /// Largest block residual relative to its scale (an exact zero counts as zero).
    ///
    /// `r_er` is measured against `‖|W̄(v)| |e_r|‖ + ν ‖|R̄|ᵀ |e|‖`, the size of
    /// the terms that cancel in it: where `v` nearly vanishes `W̄(v)` is close
    /// to singular and `e_r` carries large components that `W̄(v)` annihilates.
    pub fn relative(&self, ops: &FeOperators<T>, r: &CoupledResidual<T>, e: &[T], e_r: &[T], mode: Mode<T>) -> T {
        let rel = |x: &[T], s: T| {
            let n = norm2(x);
            if n == T::zero() {
                T::zero()
            } else {
                n / s.max(T::min_positive_value())
            }
        };
        let mut out = rel(&r.r_v, self.flow).max(rel(&r.r_e, self.costate));
        if let Mode::Viscous { nu } = mode {
            let ext = ops.mesh.extend_with_boundary(e);
            let cancel = norm2(&abs_matvec(&r.weighted, e_r)) + nu * norm2(&abs_matvec_transpose(&ops.r_nodal, &ext));
            out = out.max(rel(&r.r_er, cancel));
        }
        out
    }
}

fn abs_matvec<T: Real>(a: &BandMatrix<T>, x: &[T]) -> Vec<T> {
    (0..a.dim())
        .map(|i| a.row_range(i).map(|j| (a.get(i, j) * x[j]).abs()).sum())
        .collect()
}

fn abs_matvec_transpose<T: Real>(a: &BandMatrix<T>, x: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); a.dim()];
    for i in 0..a.dim() {
        for j in a.row_range(i) {
            out[j] += (a.get(i, j) * x[i]).abs();
        }
    }
    out
}

/// Converged Crank–Nicolson step.
#[derive(Debug, Clone)]
pub struct NewtonResult<T> {
    pub v: Vec<T>,
    pub e: Vec<T>,
    pub e_r: Vec<T>,
    pub iterations: usize,
    /// Largest block residual relative to [`ResidualScales`].
    pub residual: T,
    mode: Mode<T>,
}

impl<T: Real> NewtonResult<T> {
    /// State at time `t`; `f_r` is recovered from `M̄ f_r = R̄ᵀ e`.
    pub fn into_state(self, ops: &FeOperators<T>, t: T) -> State<T> {
        let f_r = if self.mode.is_viscous() {
            ops.solve_nodal_mass(&ops.dissipative_load(&self.e))
        } else {
            Vec::new()
        };
        State {
            t,
            v: self.v,
            e: self.e,
            f_r,
            e_r: self.e_r,
            mode: self.mode,
        }
    }
}

/// Newton's method on the coupled step equations in `(v, e, e_r)`, started from
/// the state at `tₙ`. Converged when every residual block is below `tol` times
/// its [`ResidualScales`] entry; the `r_v` block is the step residual `F`.
pub fn newton_solve<T: Real>(
    ops: &FeOperators<T>,
    state_n: &State<T>,
    dt: T,
    tol: T,
    max_iter: usize,
) -> Result<NewtonResult<T>, StepFailure> {
    let mode = state_n.mode;
    let n = ops.n_dofs();
    let lay = Layout::new(n, mode.is_viscous());
    let flow_n = state_n.effort_flow(ops);
    let scales = ResidualScales::at(ops, state_n, &flow_n, dt);
    let mut v = state_n.v.clone();
    let mut e = state_n.e.clone();
    let mut e_r = state_n.e_r.clone();
    let mut best = T::infinity();
    for iter in 0..=max_iter {
        let res = coupled_residual(ops, state_n, &flow_n, dt, &v, &e, &e_r);
        let rho = scales.relative(ops, &res, &e, &e_r, mode);
        if rho <= tol {
            return Ok(NewtonResult {
                v,
                e,
                e_r,
                iterations: iter,
                residual: rho,
                mode,
            });
        }
        // a residual that blows up is not going to come back within the budget
        let diverging = iter > 2 && rho > T::lit(1e3) * best;
        if iter == max_iter || !rho.is_finite() || diverging {
            return Err(StepFailure::NewtonDivergence {
                iterations: iter,
                residual: rho.to_f64_lossy(),
            });
        }
        best = best.min(rho);
        let lu = coupled_jacobian(ops, &res.weighted, &e_r, dt, mode)
            .lu(T::lit(JACOBIAN_PIVOT_TOL))
            .map_err(|p| StepFailure::SingularJacobian { row: p.row })?;
        let mut z = vec![T::zero(); lay.dim()];
        for i in 0..n {
            z[lay.v(i)] = -res.r_v[i];
            z[lay.e(i)] = -res.r_e[i];
        }
        for (a, r) in res.r_er.iter().enumerate() {
            z[lay.e_r(a)] = -*r;
        }
        lu.solve_in_place(&mut z);
        for i in 0..n {
            v[i] += z[lay.v(i)];
            e[i] += z[lay.e(i)];
        }
        for (a, x) in e_r.iter_mut().enumerate() {
            *x += z[lay.e_r(a)];
        }
    }
    unreachable!("loop returns on its last iteration")
}

/// Why a step attempt (or the run) stopped.
#[derive(Debug, Clone, PartialEq)]
pub enum FailureReason {
    NewtonDivergence,
    SingularWeightedMass,
    SingularJacobian,
    IndefiniteWeightedMass,
    DtUnderflow,
}

impl From<&StepFailure> for FailureReason {
    fn from(f: &StepFailure) -> Self {
        match f {
            StepFailure::NewtonDivergence { .. } => FailureReason::NewtonDivergence,
            StepFailure::SingularWeightedMass { .. } => FailureReason::SingularWeightedMass,
            StepFailure::SingularJacobian { .. } => FailureReason::SingularJacobian,
            StepFailure::IndefiniteWeightedMass { .. } => FailureReason::IndefiniteWeightedMass,
        }
    }
}

/// Result of one call to [`Integrator::adaptive_advance`].
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome<T> {
    pub accepted: bool,
    pub dt_used: T,
    pub newton_iters: usize,
    /// Newton residual relative to its convergence reference (accepted steps).
    pub relative_residual: T,
    /// Attempts rejected before this outcome.
    pub rejections: usize,
    /// Set when the step was not accepted; the last rejection otherwise.
    pub failure_reason: Option<FailureReason>,
}

/// Adaptive Crank–Nicolson stepper for one run.
#[derive(Debug, Clone)]
pub struct Integrator<'a, T> {
    ops: &'a FeOperators<T>,
    config: RunConfig<T>,
    dt: T,
    easy_streak: usize,
}

impl<'a, T: Real> Integrator<'a, T> {
    pub fn new(ops: &'a FeOperators<T>, config: RunConfig<T>) -> Self {
        let dt = config.fixed_dt.unwrap_or_else(|| config.dt0());
        Self {
            ops,
            config,
            dt,
            easy_streak: 0,
        }
    }

    pub fn config(&self) -> &RunConfig<T> {
        &self.config
    }

    /// Step size the controller will try next.
    pub fn current_dt(&self) -> T {
        self.dt
    }

    /// Advances toward `t_target`, landing on it exactly when the proposed step
    /// would reach or pass it. Accepted states are appended to `ledger`.
    pub fn adaptive_advance(
        &mut self,
        state: &State<T>,
        t_target: T,
        ledger: &mut PowerLedger<T>,
    ) -> (State<T>, StepOutcome<T>) {
        let adaptive = self.config.fixed_dt.is_none();
        let mut rejections = 0;
        let mut last_failure = None;
        loop {
            let remaining = t_target - state.t;
            let lands = self.dt >= remaining * (T::one() - T::lit(1e-12));
            let dt_try = if lands { remaining } else { self.dt };
            let solved = newton_solve(
                self.ops,
                state,
                dt_try,
                self.config.newton_tol,
                self.config.newton_max_iter,
            )
            .and_then(|res| self.check_definite(res));
            match solved {
                Ok(res) => {
                    let t_new = if lands { t_target } else { state.t + dt_try };
                    let iters = res.iterations;
                    let rel = res.residual;
                    let new_state = res.into_state(self.ops, t_new);
                    ledger.record(&self.ops.mesh, &new_state, iters);
                    if adaptive {
                        self.after_acceptance(iters);
                    }
                    return (
                        new_state,
                        StepOutcome {
                            accepted: true,
                            dt_used: dt_try,
                            newton_iters: iters,
                            relative_residual: rel,
                            rejections,
                            failure_reason: last_failure,
                        },
                    );
                }
                Err(failure) => {
                    rejections += 1;
                    last_failure = Some(FailureReason::from(&failure));
                    self.easy_streak = 0;
                    if !adaptive {
                        return (state.clone(), self.rejected(dt_try, rejections, last_failure));
                    }
                    self.dt *= self.config.shrink_factor;
                    if self.dt < self.config.dt_min() {
                        return (
                            state.clone(),
                            self.rejected(dt_try, rejections, Some(FailureReason::DtUnderflow)),
                        );
                    }
                }
            }
        }
    }

    /// `W̄(v)` of a viscous step result must admit a Cholesky factorization.
    fn check_definite(&self, res: NewtonResult<T>) -> Result<NewtonResult<T>, StepFailure> {
        if !(self.config.require_definite_weight && res.mode.is_viscous()) {
            return Ok(res);
        }
        match assemble_nodal_weighted_mass(&self.ops.mesh, &res.v).cholesky() {
            Ok(_) => Ok(res),
            Err(p) => Err(StepFailure::IndefiniteWeightedMass {
                row: p.row,
                pivot: p.pivot.to_f64_lossy(),
            }),
        }
    }

    fn rejected(&self, dt: T, rejections: usize, reason: Option<FailureReason>) -> StepOutcome<T> {
        StepOutcome {
            accepted: false,
            dt_used: dt,
            newton_iters: 0,
            relative_residual: T::nan(),
            rejections,
            failure_reason: reason,
        }
    }

    fn after_acceptance(&mut self, iters: usize) {
        if iters <= self.config.easy_newton_iters {
            self.easy_streak += 1;
        } else {
            self.easy_streak = 0;
        }
        if self.easy_streak >= self.config.grow_after {
            self.dt = (self.dt * self.config.grow_factor).min(self.config.dt_cap());
            self.easy_streak = 0;
        }
    }
}

/// Nodal fields at one output time (all `2·n_elems + 1` nodes, zero traces).
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot<T> {
    pub t: T,
    pub step: usize,
    pub v: Vec<T>,
    pub e: Vec<T>,
    pub e_r: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    Completed,
    /// The controller shrank `dt` below `dt_min`.
    DtUnderflow,
    /// A fixed-`dt` step failed.
    StepFailed(FailureReason),
}

impl Termination {
    pub fn label(&self) -> &'static str {
        match self {
            Termination::Completed => "completed",
            Termination::DtUnderflow => "dt_underflow",
            Termination::StepFailed(FailureReason::NewtonDivergence) => "newton_divergence",
            Termination::StepFailed(FailureReason::SingularWeightedMass) => "singular_w",
            Termination::StepFailed(FailureReason::SingularJacobian) => "singular_jacobian",
            Termination::StepFailed(FailureReason::IndefiniteWeightedMass) => "indefinite_w",
            Termination::StepFailed(FailureReason::DtUnderflow) => "dt_underflow",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        Some(match s {
            "completed" => Termination::Completed,
            "dt_underflow" => Termination::DtUnderflow,
            "newton_divergence" => Termination::StepFailed(FailureReason::NewtonDivergence),
            "singular_w" => Termination::StepFailed(FailureReason::SingularWeightedMass),
            "singular_jacobian" => Termination::StepFailed(FailureReason::SingularJacobian),
            "indefinite_w" => Termination::StepFailed(FailureReason::IndefiniteWeightedMass),
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary<T> {
    pub t_reached: T,
    pub n_steps: usize,
    pub rejected_steps: usize,
    pub newton_iters: usize,
    pub var: T,
    pub termination: Termination,
}

/// A run in progress: operators, current state, ledger, snapshots.
pub struct Simulation<T> {
    ops: FeOperators<T>,
    config: RunConfig<T>,
    state: State<T>,
    ledger: PowerLedger<T>,
    snapshots: Vec<Snapshot<T>>,
    next_snapshot: usize,
    dt: T,
    easy_streak: usize,
    n_steps: usize,
    rejected: usize,
    newton_iters: usize,
    termination: Option<Termination>,
}

impl<T: Real> Simulation<T> {
    /// Sets up a run from the default Gaussian pulse `exp(−50 (x − 1/2)²)`.
    pub fn new(config: RunConfig<T>) -> Result<Self> {
        Self::with_profile(config, &GaussianPulse::default())
    }

    /// Sets up a run whose initial velocity interpolates `profile` at the interior nodes.
    pub fn with_profile(config: RunConfig<T>, profile: &impl InitialProfile<T>) -> Result<Self> {
        config.validate()?;
        let mesh = build_mesh(config.n_elems)?;
        let v0 = mesh.interpolate(|x| profile.value(x));
        Self::from_coefficients(config, v0)
    }

    pub fn from_coefficients(config: RunConfig<T>, v0: Vec<T>) -> Result<Self> {
        config.validate()?;
        let mesh = build_mesh(config.n_elems)?;
        if v0.len() != mesh.n_dofs() {
            return Err(Error::Config(format!(
                "initial coefficients have length {}, mesh has {} unknowns",
                v0.len(),
                mesh.n_dofs()
            )));
        }
        let ops = assemble_operators(&mesh)?;
        let state = State::consistent(&ops, T::zero(), v0, config.mode())?;
        let mut ledger = PowerLedger::new();
        ledger.record(&ops.mesh, &state, 0);
        let dt = config.fixed_dt.unwrap_or_else(|| config.dt0());
        let mut sim = Self {
            ops,
            config,
            state,
            ledger,
            snapshots: Vec::new(),
            next_snapshot: 0,
            dt,
            easy_streak: 0,
            n_steps: 0,
            rejected: 0,
            newton_iters: 0,
            termination: None,
        };
        sim.maybe_snapshot();
        Ok(sim)
    }

    pub fn ops(&self) -> &FeOperators<T> {
        &self.ops
    }

    pub fn config(&self) -> &RunConfig<T> {
        &self.config
    }

    pub fn state(&self) -> &State<T> {
        &self.state
    }

    pub fn ledger(&self) -> &PowerLedger<T> {
        &self.ledger
    }

    pub fn snapshots(&self) -> &[Snapshot<T>] {
        &self.snapshots
    }

    pub fn termination(&self) -> Option<&Termination> {
        self.termination.as_ref()
    }

    fn snapshot_time(&self, k: usize) -> T {
        if self.config.snapshots == 0 {
            return T::zero();
        }
        self.config.t_final * T::from_count(k) / T::from_count(self.config.snapshots)
    }

    fn maybe_snapshot(&mut self) {
        let mut due = false;
        while self.next_snapshot <= self.config.snapshots
            && self.state.t >= self.snapshot_time(self.next_snapshot) * (T::one() - T::lit(1e-12))
        {
            self.next_snapshot += 1;
            due = true;
        }
        if due {
            self.push_snapshot();
        }
    }

    fn push_snapshot(&mut self) {
        let mesh = &self.ops.mesh;
        let e_r = if self.state.e_r.is_empty() {
            vec![T::zero(); mesh.nodes().len()]
        } else {
            self.state.e_r.clone()
        };
        self.snapshots.push(Snapshot {
            t: self.state.t,
            step: self.n_steps,
            v: mesh.extend_with_boundary(&self.state.v),
            e: mesh.extend_with_boundary(&self.state.e),
            e_r,
        });
    }

    /// Integrates until `t_target` (clamped to `t_final`) or a terminal failure.
    /// Returns `false` once the run has terminated early.
    pub fn advance_to(&mut self, t_target: T) -> bool {
        if self.termination.as_ref().is_some_and(|t| *t != Termination::Completed) {
            return false;
        }
        let t_target = t_target.min(self.config.t_final);
        while self.state.t < t_target {
            let mut stepper = Integrator {
                ops: &self.ops,
                config: self.config.clone(),
                dt: self.dt,
                easy_streak: self.easy_streak,
            };
            let (next, outcome) = stepper.adaptive_advance(&self.state, t_target, &mut self.ledger);
            self.dt = stepper.dt;
            self.easy_streak = stepper.easy_streak;
            self.rejected += outcome.rejections - usize::from(!outcome.accepted);
            if !outcome.accepted {
                let reason = outcome.failure_reason.unwrap_or(FailureReason::DtUnderflow);
                self.termination = Some(match (self.config.fixed_dt, reason) {
                    (None, _) | (_, FailureReason::DtUnderflow) => Termination::DtUnderflow,
                    (Some(_), r) => Termination::StepFailed(r),
                });
                self.push_final_snapshot();
                return false;
            }
            self.n_steps += 1;
            self.newton_iters += outcome.newton_iters;
            self.state = next;
            self.maybe_snapshot();
        }
        if self.state.t >= self.config.t_final {
            self.termination = Some(Termination::Completed);
        }
        true
    }

    fn push_final_snapshot(&mut self) {
        if self.snapshots.last().map(|s| s.t) != Some(self.state.t) {
            self.push_snapshot();
        }
    }

    /// Integrates to `t_final` and returns the run record.
    pub fn run(mut self) -> SimulationOutput<T> {
        self.advance_to(self.config.t_final);
        self.finish()
    }

    pub fn summary(&self) -> RunSummary<T> {
        RunSummary {
            t_reached: self.state.t,
            n_steps: self.n_steps,
            rejected_steps: self.rejected,
            newton_iters: self.newton_iters,
            var: balance_variation(&self.ledger),
            termination: self.termination.clone().unwrap_or(Termination::Completed),
        }
    }

    pub fn finish(mut self) -> SimulationOutput<T> {
        if self.termination.is_none() && self.state.t >= self.config.t_final {
            self.termination = Some(Termination::Completed);
        }
        self.push_final_snapshot();
        let summary = self.summary();
        SimulationOutput {
            nodes: self.ops.mesh.nodes().to_vec(),
            final_state: self.state,
            snapshots: self.snapshots,
            ledger: self.ledger,
            summary,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimulationOutput<T> {
    pub nodes: Vec<T>,
    pub final_state: State<T>,
    pub snapshots: Vec<Snapshot<T>>,
    pub ledger: PowerLedger<T>,
    pub summary: RunSummary<T>,
}

/// Runs one configuration from the Gaussian initial pulse.
pub fn run_simulation<T: Real>(config: RunConfig<T>) -> Result<SimulationOutput<T>> {
    Ok(Simulation::new(config)?.run())
}
