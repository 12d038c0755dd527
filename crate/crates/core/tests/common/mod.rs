//! Independent dense oracles: exact rational element integrals, dense global
//! assembly, 4-point Gauss–Legendre quadrature and dense solves via nalgebra.
#![allow(dead_code)]

use burgers_ph::banded::BandMatrix;
use burgers_ph::fem1d::{FeOperators, Mesh1D};
use nalgebra::{DMatrix, DVector};
use num_rational::Ratio;
use rand::rngs::StdRng;
use rand::Rng;

type Q = Ratio<i64>;

fn q(n: i64) -> Q {
    Q::from_integer(n)
}

/// P2 shape polynomials on `[0, 1]`, monomial coefficients.
fn shape_polys() -> [Vec<Q>; 3] {
    [vec![q(1), q(-3), q(2)], vec![q(0), q(4), q(-4)], vec![q(0), q(-1), q(2)]]
}

fn derivative(p: &[Q]) -> Vec<Q> {
    p.iter().enumerate().skip(1).map(|(k, c)| c * q(k as i64)).collect()
}

fn integrate_product(a: &[Q], b: &[Q]) -> Q {
    let mut total = q(0);
    for (i, ca) in a.iter().enumerate() {
        for (j, cb) in b.iter().enumerate() {
            total += ca * cb / q((i + j + 1) as i64);
        }
    }
    total
}

/// `∫₀¹ φ_a φ_b`
pub fn exact_local_mass() -> [[Q; 3]; 3] {
    let p = shape_polys();
    std::array::from_fn(|a| std::array::from_fn(|b| integrate_product(&p[a], &p[b])))
}

/// `L[i][j] = ∫₀¹ φ_j φ_i'`; independent of the element width.
pub fn exact_local_value_slope() -> [[Q; 3]; 3] {
    let p = shape_polys();
    std::array::from_fn(|i| std::array::from_fn(|j| integrate_product(&p[j], &derivative(&p[i]))))
}

fn to_f64(x: Q) -> f64 {
    *x.numer() as f64 / *x.denom() as f64
}

fn assemble_dense(n_elems: usize, local: [[Q; 3]; 3], scale: f64) -> DMatrix<f64> {
    let n_nodes = 2 * n_elems + 1;
    let mut m = DMatrix::zeros(n_nodes, n_nodes);
    for k in 0..n_elems {
        for a in 0..3 {
            for b in 0..3 {
                m[(2 * k + a, 2 * k + b)] += scale * to_f64(local[a][b]);
            }
        }
    }
    m
}

/// All-node mass matrix `∫ φ_a φ_b`.
pub fn dense_nodal_mass(n_elems: usize) -> DMatrix<f64> {
    assemble_dense(n_elems, exact_local_mass(), 1.0 / n_elems as f64)
}

/// All-node `D_ij = ∫ φ_j ∂ₓφ_i`.
pub fn dense_nodal_d(n_elems: usize) -> DMatrix<f64> {
    assemble_dense(n_elems, exact_local_value_slope(), 1.0)
}

pub fn interior_block(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows() - 2;
    m.view((1, 1), (n, n)).into_owned()
}

pub fn band_to_dense(b: &BandMatrix<f64>) -> DMatrix<f64> {
    let rows = b.to_dense();
    let n = rows.len();
    DMatrix::from_fn(n, n, |i, j| rows[i][j])
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

pub fn rel_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    max_abs(&(a - b)) / max_abs(b).max(f64::MIN_POSITIVE)
}

/// 4-point Gauss–Legendre rule on `[0, 1]`, exact through degree 7.
pub fn gauss4() -> [(f64, f64); 4] {
    let s = (6.0f64 / 5.0).sqrt();
    let inner = ((3.0 - 2.0 * s) / 7.0).sqrt();
    let outer = ((3.0 + 2.0 * s) / 7.0).sqrt();
    let w_in = (18.0 + 30f64.sqrt()) / 36.0;
    let w_out = (18.0 - 30f64.sqrt()) / 36.0;
    [
        (0.5 - 0.5 * outer, 0.5 * w_out),
        (0.5 - 0.5 * inner, 0.5 * w_in),
        (0.5 + 0.5 * inner, 0.5 * w_in),
        (0.5 + 0.5 * outer, 0.5 * w_out),
    ]
}

pub fn shape_at(xi: f64) -> [f64; 3] {
    [(1.0 - xi) * (1.0 - 2.0 * xi), 4.0 * xi * (1.0 - xi), xi * (2.0 * xi - 1.0)]
}

/// Interior coefficients padded with the zero boundary values.
pub fn pad(v: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(v.len() + 2);
    out.push(0.0);
    out.extend_from_slice(v);
    out.push(0.0);
    out
}

/// `∫ φ_a g(u_d) φ_b`-style integrals: calls `f(elem, [φ values], u values, weight·h)`.
fn for_each_point(n_elems: usize, mut f: impl FnMut(usize, [f64; 3], f64)) {
    let h = 1.0 / n_elems as f64;
    for k in 0..n_elems {
        for (xi, w) in gauss4() {
            f(k, shape_at(xi), w * h);
        }
    }
}

fn field_at(all: &[f64], k: usize, phi: [f64; 3]) -> f64 {
    (0..3).map(|a| all[2 * k + a] * phi[a]).sum()
}

/// `e` solving `M e = (∫ φ_i v_d²/2)_i` by dense quadrature and a dense LU solve.
pub fn dense_projection(n_elems: usize, v: &[f64]) -> Vec<f64> {
    let all = pad(v);
    let mut load = vec![0.0; 2 * n_elems + 1];
    for_each_point(n_elems, |k, phi, w| {
        let u = field_at(&all, k, phi);
        for a in 0..3 {
            load[2 * k + a] += w * 0.5 * u * u * phi[a];
        }
    });
    let m = interior_block(&dense_nodal_mass(n_elems));
    let rhs = DVector::from_column_slice(&load[1..load.len() - 1]);
    m.lu().solve(&rhs).expect("mass matrix is invertible").as_slice().to_vec()
}

/// All-node `∫ w_d φ_a φ_b` for interior or all-node coefficients `w`.
pub fn dense_weighted_mass(n_elems: usize, w: &[f64]) -> DMatrix<f64> {
    let all = if w.len() == 2 * n_elems + 1 { w.to_vec() } else { pad(w) };
    let n_nodes = 2 * n_elems + 1;
    let mut m = DMatrix::zeros(n_nodes, n_nodes);
    for_each_point(n_elems, |k, phi, wt| {
        let u = field_at(&all, k, phi);
        for a in 0..3 {
            for b in 0..3 {
                m[(2 * k + a, 2 * k + b)] += wt * u * phi[a] * phi[b];
            }
        }
    });
    m
}

/// Dense `(f_r, e_r)` from `M̄ f_r = R̄ᵀ ext(e)` and `W̄(v) e_r = ν M̄ f_r`.
pub fn dense_viscous_ports(n_elems: usize, v: &[f64], e: &[f64], nu: f64) -> (Vec<f64>, Vec<f64>) {
    // R̄ = D̄ᵀ over all nodes
    let rbar_t = dense_nodal_d(n_elems);
    let load = &rbar_t * DVector::from_vec(pad(e));
    let mbar = dense_nodal_mass(n_elems);
    let f_r = mbar.clone().lu().solve(&load).expect("nodal mass invertible");
    let w = dense_weighted_mass(n_elems, v);
    let e_r = w.lu().solve(&(nu * (&mbar * &f_r))).expect("weighted mass invertible");
    (f_r.as_slice().to_vec(), e_r.as_slice().to_vec())
}

/// Smooth positive velocity with a few random sine modes, interpolated at the interior nodes.
pub fn random_positive(mesh: &Mesh1D<f64>, rng: &mut StdRng) -> Vec<f64> {
    let offset = rng.gen_range(0.5..1.5);
    let modes: Vec<(f64, f64)> = (1..=4).map(|k| (rng.gen_range(-0.2..0.2), k as f64)).collect();
    mesh.interpolate(|x: f64| offset + modes.iter().map(|&(a, k)| a * (k * std::f64::consts::PI * x).sin()).sum::<f64>())
}

/// Velocity from proptest-drawn parameters: `offset + Σ a_k sin(kπx)`.
pub fn positive_from(mesh: &Mesh1D<f64>, offset: f64, amps: &[f64]) -> Vec<f64> {
    mesh.interpolate(|x: f64| {
        offset
            + amps
                .iter()
                .enumerate()
                .map(|(k, a)| a * ((k + 1) as f64 * std::f64::consts::PI * x).sin())
                .sum::<f64>()
    })
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn ops(n: usize) -> FeOperators<f64> {
    burgers_ph::assemble_operators(&burgers_ph::build_mesh(n).unwrap()).unwrap()
}

/// `H(0) = (1/6)∫ exp(−150(x−½)²)` and `E(0) = (1/2)∫ exp(−100(x−½)²)`, integrated over the
/// line; the mass beyond `[0, 1]` is below `1e-12`.
pub fn gaussian_initial_functionals() -> (f64, f64) {
    let pi = std::f64::consts::PI;
    ((pi / 150.0).sqrt() / 6.0, (pi / 100.0).sqrt() / 2.0)
}
