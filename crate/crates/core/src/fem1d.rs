//! Uniform P2 Lagrange discretization of the unit interval.
//!
//! Velocity and co-state live on the `N = 2·n_elems − 1` interior nodes (an
//! H¹₀ basis). The boundary test functions of the convective ports are Dirac
//! masses at `x = 0` and `x = 1`; they have no finite element representation
//! and only show up through the boundary coupling vectors. The dissipative
//! port pair `(f_r, e_r)` is expanded on all `N + 2` nodes, so its boundary
//! traces are genuine unknowns.

use crate::banded::{BandCholesky, BandMatrix};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Half-bandwidth of every assembled P2 operator.
pub const HALF_BANDWIDTH: usize = 2;

/// 5-point Gauss–Legendre rule on `[0, 1]`, exact for degree ≤ 9.
const GAUSS5_NODES: [f64; 5] = [
    0.046_910_077_030_668_004,
    0.230_765_344_947_158_45,
    0.5,
    0.769_234_655_052_841_5,
    0.953_089_922_969_332,
];
const GAUSS5_WEIGHTS: [f64; 5] = [
    0.118_463_442_528_094_54,
    0.239_314_335_249_683_23,
    0.284_444_444_444_444_44,
    0.239_314_335_249_683_23,
    0.118_463_442_528_094_54,
];

/// Quadratic Lagrange shape functions on `[0, 1]` with nodes `0, 1/2, 1`.
pub fn shape_values<T: Real>(xi: T) -> [T; 3] {
    let one = T::one();
    let two = T::lit(2.0);
    let half = T::lit(0.5);
    [
        two * (xi - half) * (xi - one),
        T::lit(4.0) * xi * (one - xi),
        two * xi * (xi - half),
    ]
}

/// Derivatives of [`shape_values`] with respect to the reference coordinate.
pub fn shape_slopes<T: Real>(xi: T) -> [T; 3] {
    let four = T::lit(4.0);
    [
        four * xi - T::lit(3.0),
        four - T::lit(8.0) * xi,
        four * xi - T::one(),
    ]
}

/// Reference element data: quadrature and tabulated shape functions.
#[derive(Debug, Clone)]
pub struct ReferenceElement<T> {
    pub points: [T; 5],
    pub weights: [T; 5],
    pub values: [[T; 3]; 5],
    pub slopes: [[T; 3]; 5],
}

impl<T: Real> ReferenceElement<T> {
    pub fn new() -> Self {
        let points = GAUSS5_NODES.map(T::lit);
        let weights = GAUSS5_WEIGHTS.map(T::lit);
        Self {
            points,
            weights,
            values: points.map(shape_values),
            slopes: points.map(shape_slopes),
        }
    }

    /// `∫ L_a L_b dξ`
    pub fn mass(&self) -> [[T; 3]; 3] {
        self.local(|q, a, b| self.values[q][a] * self.values[q][b])
    }

    /// `∫ L_b L_a' dξ` (row `a`, column `b`)
    pub fn value_times_slope(&self) -> [[T; 3]; 3] {
        self.local(|q, a, b| self.values[q][b] * self.slopes[q][a])
    }

    /// `∫ L_b' L_a dξ` (row `a`, column `b`)
    pub fn slope_times_value(&self) -> [[T; 3]; 3] {
        self.local(|q, a, b| self.slopes[q][b] * self.values[q][a])
    }

    fn local(&self, f: impl Fn(usize, usize, usize) -> T) -> [[T; 3]; 3] {
        let mut m = [[T::zero(); 3]; 3];
        for (a, row) in m.iter_mut().enumerate() {
            for (b, entry) in row.iter_mut().enumerate() {
                *entry = (0..5).map(|q| self.weights[q] * f(q, a, b)).sum();
            }
        }
        m
    }
}

impl<T: Real> Default for ReferenceElement<T> {
    fn default() -> Self {
        Self::new()
    }
}

/// Uniform partition of `[0, 1]` with the P2 node layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh1D<T> {
    n_elems: usize,
    h: T,
    nodes: Vec<T>,
    interior: Vec<usize>,
}

/// Builds the uniform mesh with `n_elems` quadratic elements.
pub fn build_mesh<T: Real>(n_elems: usize) -> Result<Mesh1D<T>> {
    if n_elems == 0 {
        return Err(Error::Config("mesh needs at least one element".into()));
    }
    let n_nodes = 2 * n_elems + 1;
    let denom = T::from_count(2 * n_elems);
    let nodes = (0..n_nodes)
        .map(|k| {
            if k == n_nodes - 1 {
                T::one()
            } else {
                T::from_count(k) / denom
            }
        })
        .collect();
    Ok(Mesh1D {
        n_elems,
        h: T::one() / T::from_count(n_elems),
        nodes,
        interior: (1..n_nodes - 1).collect(),
    })
}

impl<T: Real> Mesh1D<T> {
    /// Mesh whose element width is the closest uniform width to `h`.
    pub fn with_width(h: T) -> Result<Self> {
        if !(h > T::zero()) || h > T::one() {
            return Err(Error::Config(format!("mesh width {h} must lie in (0, 1]")));
        }
        let n = (T::one() / h).round().to_usize().unwrap_or(0).max(1);
        build_mesh(n)
    }

    pub fn n_elems(&self) -> usize {
        self.n_elems
    }

    pub fn h(&self) -> T {
        self.h
    }

    /// All `2·n_elems + 1` node coordinates, left to right.
    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    /// Number of interior unknowns `N`.
    pub fn n_dofs(&self) -> usize {
        self.interior.len()
    }

    /// Global node index of interior unknown `rank` (0-based).
    pub fn interior_index_map(&self) -> &[usize] {
        &self.interior
    }

    /// Interior rank of a global node, `None` on the boundary.
    #[inline]
    pub fn dof_of_node(&self, node: usize) -> Option<usize> {
        if node == 0 || node + 1 >= self.nodes.len() {
            None
        } else {
            Some(node - 1)
        }
    }

    #[inline]
    pub fn element_nodes(&self, elem: usize) -> [usize; 3] {
        [2 * elem, 2 * elem + 1, 2 * elem + 2]
    }

    /// Interior coordinates (the nodes carrying unknowns).
    pub fn interior_nodes(&self) -> Vec<T> {
        self.interior.iter().map(|&g| self.nodes[g]).collect()
    }

    /// Coefficients of `coeffs` on one element. `coeffs` holds either the
    /// interior unknowns (boundary nodes then carry zero) or values on all nodes.
    #[inline]
    pub fn local_coefficients(&self, coeffs: &[T], elem: usize) -> [T; 3] {
        let g = self.element_nodes(elem);
        if coeffs.len() == self.nodes.len() {
            return g.map(|k| coeffs[k]);
        }
        debug_assert_eq!(coeffs.len(), self.n_dofs(), "coefficient vector length");
        g.map(|k| self.dof_of_node(k).map_or(T::zero(), |d| coeffs[d]))
    }

    /// Nodal values over all nodes, with zeros at `x = 0` and `x = 1`.
    pub fn extend_with_boundary(&self, coeffs: &[T]) -> Vec<T> {
        let mut out = Vec::with_capacity(self.nodes.len());
        out.push(T::zero());
        out.extend_from_slice(coeffs);
        out.push(T::zero());
        out
    }

    /// Interpolates `f` at the interior nodes; boundary values are dropped.
    pub fn interpolate(&self, f: impl Fn(T) -> T) -> Vec<T> {
        self.interior.iter().map(|&g| f(self.nodes[g])).collect()
    }

    /// Element containing `x` and the reference coordinate of `x` in it.
    pub fn locate(&self, x: T) -> (usize, T) {
        let s = (x / self.h).max(T::zero());
        let elem = s.floor().to_usize().unwrap_or(0).min(self.n_elems - 1);
        (elem, s - T::from_count(elem))
    }

    /// Value at `x` of the finite element function with coefficients `coeffs`
    /// (interior or all-node, see [`Mesh1D::local_coefficients`]).
    pub fn eval(&self, coeffs: &[T], x: T) -> T {
        let (elem, xi) = self.locate(x);
        let c = self.local_coefficients(coeffs, elem);
        let l = shape_values(xi);
        c[0] * l[0] + c[1] * l[1] + c[2] * l[2]
    }

    /// Spatial derivative of the finite element function at `x`.
    pub fn eval_slope(&self, coeffs: &[T], x: T) -> T {
        let (elem, xi) = self.locate(x);
        let c = self.local_coefficients(coeffs, elem);
        let d = shape_slopes(xi);
        (c[0] * d[0] + c[1] * d[1] + c[2] * d[2]) / self.h
    }

    /// Applies `f` at every quadrature point of every element.
    pub fn for_each_quadrature_point(
        &self,
        reference: &ReferenceElement<T>,
        mut f: impl FnMut(&QuadPoint<T>),
    ) {
        for elem in 0..self.n_elems {
            let x0 = T::from_count(elem) * self.h;
            for q in 0..5 {
                let slopes = reference.slopes[q].map(|d| d / self.h);
                f(&QuadPoint {
                    elem,
                    x: x0 + reference.points[q] * self.h,
                    weight: reference.weights[q] * self.h,
                    values: reference.values[q],
                    slopes,
                });
            }
        }
    }

    /// `∫₀¹ g(x, u₁(x), u₂(x), …) dx` for finite element fields `u_k`, using the
    /// 5-point rule (exact for polynomial integrands of degree ≤ 9).
    pub fn integrate_fields(&self, fields: &[&[T]], g: impl Fn(&FieldSample<T>) -> T) -> T {
        let reference = ReferenceElement::new();
        let mut total = T::zero();
        let mut values = vec![T::zero(); fields.len()];
        let mut slopes = vec![T::zero(); fields.len()];
        self.for_each_quadrature_point(&reference, |qp| {
            for (k, field) in fields.iter().enumerate() {
                let c = self.local_coefficients(field, qp.elem);
                values[k] = qp.interpolate(&c);
                slopes[k] = qp.interpolate_slope(&c);
            }
            total += qp.weight
                * g(&FieldSample {
                    x: qp.x,
                    values: &values,
                    slopes: &slopes,
                });
        });
        total
    }
}

/// A quadrature point in physical coordinates with its basis tabulation.
#[derive(Debug, Clone, Copy)]
pub struct QuadPoint<T> {
    pub elem: usize,
    pub x: T,
    /// Quadrature weight including the element Jacobian `h`.
    pub weight: T,
    pub values: [T; 3],
    /// Physical derivatives of the local shape functions.
    pub slopes: [T; 3],
}

impl<T: Real> QuadPoint<T> {
    #[inline]
    pub fn interpolate(&self, local: &[T; 3]) -> T {
        local[0] * self.values[0] + local[1] * self.values[1] + local[2] * self.values[2]
    }

    #[inline]
    pub fn interpolate_slope(&self, local: &[T; 3]) -> T {
        local[0] * self.slopes[0] + local[1] * self.slopes[1] + local[2] * self.slopes[2]
    }
}

/// Field values (and derivatives) at one quadrature point.
pub struct FieldSample<'a, T> {
    pub x: T,
    pub values: &'a [T],
    pub slopes: &'a [T],
}

/// Boundary coupling vector: nonzero only on the Dirac test functions at
/// `x = 0` (index `0`) and `x = 1` (index `N + 1`), zero on every interior index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryVector<T> {
    pub left: T,
    pub right: T,
}

impl<T: Real> BoundaryVector<T> {
    /// Restriction to the interior indices `1..=N`: identically zero.
    pub fn interior(&self, n_dofs: usize) -> Vec<T> {
        vec![T::zero(); n_dofs]
    }

    /// Full vector over indices `0..=N+1`.
    pub fn extended(&self, n_dofs: usize) -> Vec<T> {
        let mut out = vec![T::zero(); n_dofs + 2];
        out[0] = self.left;
        out[n_dofs + 1] = self.right;
        out
    }

    /// Pairing with an effort given by its boundary traces `(γ₀, γ₁)`.
    pub fn pair_traces(&self, left_trace: T, right_trace: T) -> T {
        self.left * left_trace + self.right * right_trace
    }
}

/// Assembled matrices and vectors of the discrete Dirac structure.
#[derive(Debug, Clone)]
pub struct FeOperators<T> {
    pub mesh: Mesh1D<T>,
    pub reference: ReferenceElement<T>,
    /// `M_ij = ∫ φ_j φ_i`
    pub mass: BandMatrix<T>,
    pub mass_factor: BandCholesky<T>,
    /// `D_ij = ∫ φ_j ∂ₓφ_i`
    pub d: BandMatrix<T>,
    /// `R_ij = ∫ ∂ₓφ_j φ_i`
    pub r: BandMatrix<T>,
    /// `Rᵀ`
    pub r_transpose: BandMatrix<T>,
    /// `R` over all nodes. Its interior rows couple the all-node `e_r` into
    /// the velocity equation; its interior block is `r`.
    pub r_nodal: BandMatrix<T>,
    /// Mass matrix over all nodes, the Gram matrix of the `(f_r, e_r)` space.
    pub nodal_mass: BandMatrix<T>,
    pub nodal_mass_factor: BandCholesky<T>,
    pub b_left: BoundaryVector<T>,
    pub b_right: BoundaryVector<T>,
    pub b_visc_left: BoundaryVector<T>,
    pub b_visc_right: BoundaryVector<T>,
}

/// Assembles every operator of the discrete inviscid and viscous systems.
pub fn assemble_operators<T: Real>(mesh: &Mesh1D<T>) -> Result<FeOperators<T>> {
    let reference = ReferenceElement::new();
    let h = mesh.h();
    let m_ref = reference.mass();
    let d_ref = reference.value_times_slope();
    let r_ref = reference.slope_times_value();

    let n = mesh.n_dofs();
    let mut mass = BandMatrix::zeros(n, HALF_BANDWIDTH, HALF_BANDWIDTH);
    let mut d = BandMatrix::zeros(n, HALF_BANDWIDTH, HALF_BANDWIDTH);
    let mut r = BandMatrix::zeros(n, HALF_BANDWIDTH, HALF_BANDWIDTH);
    scatter(mesh, &mut mass, |a, b| h * m_ref[a][b]);
    scatter(mesh, &mut d, |a, b| d_ref[a][b]);
    scatter(mesh, &mut r, |a, b| r_ref[a][b]);

    let not_pd = |p: crate::banded::SingularPivot<T>| Error::NotPositiveDefinite {
        row: p.row,
        pivot: p.pivot.to_f64_lossy(),
    };
    let mass_factor = mass.cholesky().map_err(not_pd)?;
    let nodal_mass = assemble_full_mass(mesh);
    let nodal_mass_factor = nodal_mass.cholesky().map_err(not_pd)?;
    let mut r_nodal = BandMatrix::zeros(mesh.nodes().len(), HALF_BANDWIDTH, HALF_BANDWIDTH);
    for elem in 0..mesh.n_elems() {
        let g = mesh.element_nodes(elem);
        for a in 0..3 {
            for b in 0..3 {
                r_nodal.add(g[a], g[b], r_ref[a][b]);
            }
        }
    }
    let sqrt2 = T::SQRT_2();
    Ok(FeOperators {
        mesh: mesh.clone(),
        reference,
        r_transpose: r.transpose(),
        r_nodal,
        nodal_mass,
        nodal_mass_factor,
        mass,
        mass_factor,
        d,
        r,
        b_left: BoundaryVector {
            left: sqrt2,
            right: T::zero(),
        },
        b_right: BoundaryVector {
            left: T::zero(),
            right: -sqrt2,
        },
        b_visc_left: BoundaryVector {
            left: -T::one(),
            right: T::zero(),
        },
        b_visc_right: BoundaryVector {
            left: T::zero(),
            right: T::one(),
        },
    })
}

fn scatter<T: Real>(mesh: &Mesh1D<T>, target: &mut BandMatrix<T>, local: impl Fn(usize, usize) -> T) {
    for elem in 0..mesh.n_elems() {
        let g = mesh.element_nodes(elem);
        for a in 0..3 {
            let Some(i) = mesh.dof_of_node(g[a]) else { continue };
            for b in 0..3 {
                let Some(j) = mesh.dof_of_node(g[b]) else { continue };
                target.add(i, j, local(a, b));
            }
        }
    }
}

/// Mass matrix over all `2·n_elems + 1` nodes, boundary vertex functions included.
pub fn assemble_full_mass<T: Real>(mesh: &Mesh1D<T>) -> BandMatrix<T> {
    let m_ref = ReferenceElement::<T>::new().mass();
    let n = mesh.nodes().len();
    let mut m = BandMatrix::zeros(n, HALF_BANDWIDTH, HALF_BANDWIDTH);
    for elem in 0..mesh.n_elems() {
        let g = mesh.element_nodes(elem);
        for a in 0..3 {
            for b in 0..3 {
                m.add(g[a], g[b], mesh.h() * m_ref[a][b]);
            }
        }
    }
    m
}

/// `W(v)_ij = ∫ v_d φ_j φ_i`, the `v`-weighted mass matrix.
pub fn assemble_weighted_mass<T: Real>(mesh: &Mesh1D<T>, v: &[T]) -> BandMatrix<T> {
    assert_eq!(v.len(), mesh.n_dofs(), "coefficient vector length");
    let reference = ReferenceElement::new();
    let n = mesh.n_dofs();
    let mut w = BandMatrix::zeros(n, HALF_BANDWIDTH, HALF_BANDWIDTH);
    let mut local = [[T::zero(); 3]; 3];
    let mut current = usize::MAX;
    let flush = |w: &mut BandMatrix<T>, elem: usize, local: &[[T; 3]; 3]| {
        let g = mesh.element_nodes(elem);
        for a in 0..3 {
            let Some(i) = mesh.dof_of_node(g[a]) else { continue };
            for b in 0..3 {
                let Some(j) = mesh.dof_of_node(g[b]) else { continue };
                w.add(i, j, local[a][b]);
            }
        }
    };
    let mut coeffs = [T::zero(); 3];
    mesh.for_each_quadrature_point(&reference, |qp| {
        if qp.elem != current {
            if current != usize::MAX {
                flush(&mut w, current, &local);
            }
            current = qp.elem;
            local = [[T::zero(); 3]; 3];
            coeffs = mesh.local_coefficients(v, qp.elem);
        }
        let wv = qp.weight * qp.interpolate(&coeffs);
        for a in 0..3 {
            for b in 0..3 {
                local[a][b] += wv * qp.values[a] * qp.values[b];
            }
        }
    });
    if current != usize::MAX {
        flush(&mut w, current, &local);
    }
    w
}

/// `W(w)_ab = ∫ w_d φ_b φ_a` over all nodes; `w` holds interior or all-node coefficients.
pub fn assemble_nodal_weighted_mass<T: Real>(mesh: &Mesh1D<T>, w: &[T]) -> BandMatrix<T> {
    let reference = ReferenceElement::new();
    let mut out = BandMatrix::zeros(mesh.nodes().len(), HALF_BANDWIDTH, HALF_BANDWIDTH);
    let mut coeffs = [T::zero(); 3];
    let mut current = usize::MAX;
    mesh.for_each_quadrature_point(&reference, |qp| {
        if qp.elem != current {
            current = qp.elem;
            coeffs = mesh.local_coefficients(w, qp.elem);
        }
        let g = mesh.element_nodes(qp.elem);
        let wq = qp.weight * qp.interpolate(&coeffs);
        for a in 0..3 {
            for b in 0..3 {
                out.add(g[a], g[b], wq * qp.values[a] * qp.values[b]);
            }
        }
    });
    out
}

/// `N(v)_i = ∫ φ_i v_d² / 2`, the right-hand side of the co-state projection.
pub fn assemble_quadratic_load<T: Real>(mesh: &Mesh1D<T>, v: &[T]) -> Vec<T> {
    assert_eq!(v.len(), mesh.n_dofs(), "coefficient vector length");
    let reference = ReferenceElement::new();
    let mut load = vec![T::zero(); mesh.n_dofs()];
    let half = T::lit(0.5);
    mesh.for_each_quadrature_point(&reference, |qp| {
        let c = mesh.local_coefficients(v, qp.elem);
        let vq = qp.interpolate(&c);
        let s = qp.weight * half * vq * vq;
        let g = mesh.element_nodes(qp.elem);
        for a in 0..3 {
            if let Some(i) = mesh.dof_of_node(g[a]) {
                load[i] += s * qp.values[a];
            }
        }
    });
    load
}

impl<T: Real> FeOperators<T> {
    pub fn n_dofs(&self) -> usize {
        self.mesh.n_dofs()
    }

    /// Solves `M x = b`.
    pub fn solve_mass(&self, b: &[T]) -> Vec<T> {
        self.mass_factor.solve(b)
    }

    /// Number of nodes, the dimension of the dissipative port space.
    pub fn n_nodes(&self) -> usize {
        self.mesh.nodes().len()
    }

    /// Solves the all-node mass system.
    pub fn solve_nodal_mass(&self, b: &[T]) -> Vec<T> {
        self.nodal_mass_factor.solve(b)
    }

    /// `(∫ e_d ∂ₓφ_a)_a` over all nodes for an interior co-state `e`: the
    /// right-hand side of the dissipative flow equation.
    pub fn dissipative_load(&self, e: &[T]) -> Vec<T> {
        self.r_nodal.matvec_transpose(&self.mesh.extend_with_boundary(e))
    }

    /// `(∫ ∂ₓe_rd φ_i)_i` on the interior rows for an all-node `e_r`.
    pub fn dissipative_divergence(&self, e_r: &[T]) -> Vec<T> {
        let full = self.r_nodal.matvec(e_r);
        full[1..full.len() - 1].to_vec()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_element_mesh() {
        let m = build_mesh::<f64>(1).unwrap();
        assert_eq!(m.nodes(), &[0.0, 0.5, 1.0]);
        assert_eq!(m.n_dofs(), 1);
        assert_eq!(m.interior_index_map(), &[1]);
    }

    #[test]
    fn two_element_mesh() {
        let m = build_mesh::<f64>(2).unwrap();
        assert_eq!(m.nodes(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(m.n_dofs(), 3);
    }

    #[test]
    fn fine_mesh_size() {
        let m = build_mesh::<f64>(2000).unwrap();
        assert!((m.h() - 5e-4).abs() < 1e-18);
        assert_eq!(m.n_dofs(), 3999);
        let nodes = m.nodes();
        assert_eq!(nodes[0], 0.0);
        assert_eq!(*nodes.last().unwrap(), 1.0);
        assert!(nodes.windows(2).all(|w| w[1] > w[0]));
        for k in 0..m.n_elems() {
            let gap = nodes[2 * k + 2] - nodes[2 * k];
            assert!((gap - m.h()).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_elements_is_config_error() {
        assert!(matches!(build_mesh::<f64>(0), Err(Error::Config(_))));
    }

    #[test]
    fn width_constructor_rounds_to_uniform_mesh() {
        let m = Mesh1D::<f64>::with_width(2.5e-3).unwrap();
        assert_eq!(m.n_elems(), 400);
        assert!(Mesh1D::<f64>::with_width(0.0).is_err());
    }

    #[test]
    fn shape_functions_are_nodal() {
        for (k, xi) in [0.0, 0.5, 1.0].into_iter().enumerate() {
            let l = shape_values::<f64>(xi);
            for (a, &la) in l.iter().enumerate() {
                assert_eq!(la, if a == k { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn single_element_full_mass_matrix() {
        let mesh = build_mesh::<f64>(1).unwrap();
        let m = assemble_full_mass(&mesh);
        let expected = [[4.0, 2.0, -1.0], [2.0, 16.0, 2.0], [-1.0, 2.0, 4.0]];
        for a in 0..3 {
            for b in 0..3 {
                assert!((m.get(a, b) - expected[a][b] / 30.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn weighted_mass_vanishes_for_zero_weight() {
        let mesh = build_mesh::<f64>(4).unwrap();
        let w = assemble_weighted_mass(&mesh, &vec![0.0; mesh.n_dofs()]);
        assert_eq!(w.max_abs(), 0.0);
    }

    #[test]
    fn unit_weight_reproduces_mass_on_interior_patch() {
        let mesh = build_mesh::<f64>(5).unwrap();
        let ops = assemble_operators(&mesh).unwrap();
        let w = assemble_weighted_mass(&mesh, &vec![1.0; mesh.n_dofs()]);
        // element 2 has all three nodes (4, 5, 6) interior
        for &i in &[3usize, 4, 5] {
            for &j in &[3usize, 4, 5] {
                assert!((w.get(i, j) - ops.mass.get(i, j)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn quadratic_load_zero_and_homogeneous() {
        let mesh = build_mesh::<f64>(3).unwrap();
        let zero = assemble_quadratic_load(&mesh, &[0.0; 5]);
        assert!(zero.iter().all(|&x| x == 0.0));
        let v = [0.3, -1.2, 0.8, 2.0, -0.4];
        let v2: Vec<f64> = v.iter().map(|x| 2.0 * x).collect();
        let n1 = assemble_quadratic_load(&mesh, &v);
        let n2 = assemble_quadratic_load(&mesh, &v2);
        for (a, b) in n1.iter().zip(&n2) {
            assert!((b - 4.0 * a).abs() < 1e-14);
        }
    }

    #[test]
    fn boundary_vectors_vanish_on_interior() {
        let mesh = build_mesh::<f64>(3).unwrap();
        let ops = assemble_operators(&mesh).unwrap();
        for b in [ops.b_left, ops.b_right, ops.b_visc_left, ops.b_visc_right] {
            assert!(b.interior(mesh.n_dofs()).iter().all(|&x| x == 0.0));
            let ext = b.extended(mesh.n_dofs());
            assert!(ext[1..=mesh.n_dofs()].iter().all(|&x| x == 0.0));
        }
        assert!((ops.b_left.left - 2f64.sqrt()).abs() < 1e-15);
        assert!((ops.b_right.right + 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn eval_reproduces_nodal_values() {
        let mesh = build_mesh::<f64>(4).unwrap();
        let v: Vec<f64> = (0..mesh.n_dofs()).map(|i| (i as f64 * 0.7).cos()).collect();
        for (k, &x) in mesh.interior_nodes().iter().enumerate() {
            assert!((mesh.eval(&v, x) - v[k]).abs() < 1e-14);
        }
        assert_eq!(mesh.eval(&v, 0.0), 0.0);
        assert!(mesh.eval(&v, 1.0).abs() < 1e-15);
    }

    #[test]
    fn works_in_single_precision() {
        let mesh = build_mesh::<f32>(7).unwrap();
        let ops = assemble_operators(&mesh).unwrap();
        let sum = ops.d.add_scaled(1.0, &ops.d.transpose());
        assert!(sum.max_abs() <= 1e-6 * ops.d.max_abs());
    }
}
