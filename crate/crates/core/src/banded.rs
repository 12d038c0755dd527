//! Banded matrix storage with LU (partial pivoting) and Cholesky factorizations.
//!
//! P2 elements on a uniform 1D mesh couple a node with at most two neighbours on
//! each side, so every assembled operator has half-bandwidth 2 and all solves
//! are linear in the number of unknowns.

use crate::scalar::Real;

/// Square matrix with `kl` sub-diagonals and `ku` super-diagonals, row-major band storage.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix<T> {
    n: usize,
    kl: usize,
    ku: usize,
    data: Vec<T>,
}

impl<T: Real> BandMatrix<T> {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        Self {
            n,
            kl,
            ku,
            data: vec![T::zero(); n * (kl + ku + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn lower_bandwidth(&self) -> usize {
        self.kl
    }

    pub fn upper_bandwidth(&self) -> usize {
        self.ku
    }

    #[inline]
    pub fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && j + self.kl >= i && j <= i + self.ku
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * (self.kl + self.ku + 1) + (j + self.kl - i)
    }

    /// Entry `(i, j)`; zero outside the band.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        if self.in_band(i, j) {
            self.data[self.idx(i, j)]
        } else {
            T::zero()
        }
    }

    /// Panics if `(i, j)` lies outside the band.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, value: T) {
        assert!(self.in_band(i, j), "entry ({i}, {j}) outside band");
        let k = self.idx(i, j);
        self.data[k] += value;
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: T) {
        assert!(self.in_band(i, j), "entry ({i}, {j}) outside band");
        let k = self.idx(i, j);
        self.data[k] = value;
    }

    /// Column range touched by row `i`.
    #[inline]
    pub fn row_range(&self, i: usize) -> std::ops::Range<usize> {
        i.saturating_sub(self.kl)..(i + self.ku + 1).min(self.n)
    }

    /// `y = A x`
    pub fn matvec_into(&self, x: &[T], y: &mut [T]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row_range(i).map(|j| self.data[self.idx(i, j)] * x[j]).sum();
        }
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.n];
        self.matvec_into(x, &mut y);
        y
    }

    /// `Aᵀ x`
    pub fn matvec_transpose(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![T::zero(); self.n];
        for (i, &xi) in x.iter().enumerate() {
            for j in self.row_range(i) {
                y[j] += self.data[self.idx(i, j)] * xi;
            }
        }
        y
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.n, self.ku, self.kl);
        for i in 0..self.n {
            for j in self.row_range(i) {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
    }

    /// Largest absolute row sum (infinity norm).
    pub fn norm_inf(&self) -> T {
        (0..self.n)
            .map(|i| self.row_range(i).map(|j| self.get(i, j).abs()).sum::<T>())
            .fold(T::zero(), T::max)
    }

    /// Entrywise `self + scale * other`; both operands must share the band shape.
    pub fn add_scaled(&self, scale: T, other: &Self) -> Self {
        assert_eq!((self.n, self.kl, self.ku), (other.n, other.kl, other.ku));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| a + scale * b)
            .collect();
        Self { data, ..*self }
    }

    pub fn to_dense(&self) -> Vec<Vec<T>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j)).collect())
            .collect()
    }

    /// LU with partial pivoting. A pivot smaller than `rel_threshold · ‖A‖_∞` is
    /// reported as singular.
    pub fn lu(&self, rel_threshold: T) -> Result<BandLu<T>, SingularPivot<T>> {
        BandLu::factor(self, rel_threshold)
    }

    /// Cholesky factorization of a symmetric positive-definite band matrix.
    /// Only the lower band is read.
    pub fn cholesky(&self) -> Result<BandCholesky<T>, SingularPivot<T>> {
        BandCholesky::factor(self)
    }
}

/// Pivot that failed the factorization's acceptance test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularPivot<T> {
    pub row: usize,
    pub pivot: T,
    pub threshold: T,
}

/// Banded LU factors in LAPACK `gbtrf` layout (row interchanges interleaved with
/// elimination). The upper factor has bandwidth `kl + ku` to absorb pivoting fill.
#[derive(Debug, Clone)]
pub struct BandLu<T> {
    n: usize,
    kl: usize,
    width_u: usize,
    upper: Vec<T>,
    lower: Vec<T>,
    pivots: Vec<usize>,
    min_pivot: T,
}

impl<T: Real> BandLu<T> {
    fn factor(a: &BandMatrix<T>, rel_threshold: T) -> Result<Self, SingularPivot<T>> {
        let (n, kl, ku) = (a.n, a.kl, a.ku);
        let width_u = kl + ku;
        let stride = kl + width_u + 1;
        // row i holds columns i-kl ..= i+kl+ku
        let at = |i: usize, j: usize| i * stride + (j + kl - i);
        let mut w = vec![T::zero(); n * stride];
        for i in 0..n {
            for j in a.row_range(i) {
                w[at(i, j)] = a.get(i, j);
            }
        }
        let threshold = rel_threshold * a.norm_inf();
        let mut lower = vec![T::zero(); n * kl];
        let mut pivots = vec![0; n];
        let mut min_pivot = T::infinity();

        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + width_u).min(n - 1);
            let mut p = k;
            let mut best = w[at(k, k)].abs();
            for i in k + 1..=last_row {
                let cand = w[at(i, k)].abs();
                if cand > best {
                    best = cand;
                    p = i;
                }
            }
            if !(best > threshold) || !best.is_finite() {
                return Err(SingularPivot {
                    row: k,
                    pivot: best,
                    threshold,
                });
            }
            min_pivot = min_pivot.min(best);
            pivots[k] = p;
            if p != k {
                for j in k..=last_col {
                    w.swap(at(k, j), at(p, j));
                }
            }
            let diag = w[at(k, k)];
            for i in k + 1..=last_row {
                let m = w[at(i, k)] / diag;
                lower[k * kl + (i - k - 1)] = m;
                w[at(i, k)] = T::zero();
                if m != T::zero() {
                    for j in k + 1..=last_col {
                        let ukj = w[at(k, j)];
                        w[at(i, j)] -= m * ukj;
                    }
                }
            }
        }

        // keep only the upper triangle: row i, columns i ..= i+width_u
        let mut upper = vec![T::zero(); n * (width_u + 1)];
        for i in 0..n {
            for j in i..=(i + width_u).min(n - 1) {
                upper[i * (width_u + 1) + (j - i)] = w[at(i, j)];
            }
        }
        Ok(Self {
            n,
            kl,
            width_u,
            upper,
            lower,
            pivots,
            min_pivot,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Smallest pivot magnitude met during elimination.
    pub fn min_pivot(&self) -> T {
        self.min_pivot
    }

    pub fn solve_in_place(&self, b: &mut [T]) {
        assert_eq!(b.len(), self.n);
        let (n, kl, wu) = (self.n, self.kl, self.width_u);
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            for i in k + 1..=(k + kl).min(n.saturating_sub(1)) {
                b[i] -= self.lower[k * kl + (i - k - 1)] * bk;
            }
        }
        for i in (0..n).rev() {
            let row = &self.upper[i * (wu + 1)..(i + 1) * (wu + 1)];
            let mut s = b[i];
            for j in i + 1..=(i + wu).min(n - 1) {
                s -= row[j - i] * b[j];
            }
            b[i] = s / row[0];
        }
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

/// Lower Cholesky factor `L` with `A = L Lᵀ`, stored by rows over the band.
#[derive(Debug, Clone)]
pub struct BandCholesky<T> {
    n: usize,
    p: usize,
    l: Vec<T>,
}

impl<T: Real> BandCholesky<T> {
    fn factor(a: &BandMatrix<T>) -> Result<Self, SingularPivot<T>> {
        let (n, p) = (a.n, a.kl);
        let at = |i: usize, j: usize| i * (p + 1) + (j + p - i);
        let mut l = vec![T::zero(); n * (p + 1)];
        for j in 0..n {
            let mut s = a.get(j, j);
            for k in j.saturating_sub(p)..j {
                s -= l[at(j, k)] * l[at(j, k)];
            }
            if !(s > T::zero()) || !s.is_finite() {
                return Err(SingularPivot {
                    row: j,
                    pivot: s,
                    threshold: T::zero(),
                });
            }
            let d = s.sqrt();
            l[at(j, j)] = d;
            for i in j + 1..=(j + p).min(n - 1) {
                let mut s = a.get(i, j);
                for k in i.saturating_sub(p)..j {
                    s -= l[at(i, k)] * l[at(j, k)];
                }
                l[at(i, j)] = s / d;
            }
        }
        Ok(Self { n, p, l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve_in_place(&self, b: &mut [T]) {
        assert_eq!(b.len(), self.n);
        let (n, p) = (self.n, self.p);
        let at = |i: usize, j: usize| i * (p + 1) + (j + p - i);
        for i in 0..n {
            let mut s = b[i];
            for k in i.saturating_sub(p)..i {
                s -= self.l[at(i, k)] * b[k];
            }
            b[i] = s / self.l[at(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in i + 1..=(i + p).min(n - 1) {
                s -= self.l[at(k, i)] * b[k];
            }
            b[i] = s / self.l[at(i, i)];
        }
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{rngs::StdRng, Rng, SeedableRng};

    fn random_band(n: usize, kl: usize, ku: usize, rng: &mut StdRng) -> BandMatrix<f64> {
        let mut a = BandMatrix::zeros(n, kl, ku);
        for i in 0..n {
            for j in a.row_range(i) {
                a.set(i, j, rng.gen_range(-1.0..1.0));
            }
        }
        a
    }

    fn dense_matvec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
        a.iter()
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    #[test]
    fn lu_solves_random_band_systems() {
        let mut rng = StdRng::seed_from_u64(7);
        for &(n, kl, ku) in &[(1, 0, 0), (5, 2, 2), (40, 8, 8), (33, 1, 3), (17, 4, 0)] {
            let a = random_band(n, kl, ku, &mut rng);
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let b = a.matvec(&x);
            let lu = a.lu(1e-14).unwrap();
            let got = lu.solve(&b);
            for (g, e) in got.iter().zip(&x) {
                assert!((g - e).abs() < 1e-9, "n={n} kl={kl} ku={ku}: {g} vs {e}");
            }
        }
    }

    #[test]
    fn lu_needs_pivoting_on_zero_diagonal() {
        let mut a = BandMatrix::<f64>::zeros(3, 1, 1);
        a.set(0, 1, 1.0);
        a.set(1, 0, 1.0);
        a.set(1, 2, 2.0);
        a.set(2, 1, 3.0);
        a.set(2, 2, 1.0);
        let x = [1.0, -2.0, 0.5];
        let b = a.matvec(&x);
        let got = a.lu(1e-14).unwrap().solve(&b);
        for (g, e) in got.iter().zip(&x) {
            assert!((g - e).abs() < 1e-14);
        }
    }

    #[test]
    fn singular_matrix_reports_pivot() {
        let mut a = BandMatrix::<f64>::zeros(3, 1, 1);
        a.set(0, 0, 1.0);
        a.set(1, 1, 0.0);
        a.set(2, 2, 1.0);
        let err = a.lu(1e-14).unwrap_err();
        assert_eq!(err.row, 1);
    }

    #[test]
    fn cholesky_matches_dense_product() {
        let mut rng = StdRng::seed_from_u64(3);
        let n = 25;
        let p = 2;
        let mut a = BandMatrix::<f64>::zeros(n, p, p);
        for i in 0..n {
            a.set(i, i, 6.0);
            for j in i + 1..=(i + p).min(n - 1) {
                let v = rng.gen_range(-1.0..1.0);
                a.set(i, j, v);
                a.set(j, i, v);
            }
        }
        let x: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let b = dense_matvec(&a.to_dense(), &x);
        let got = a.cholesky().unwrap().solve(&b);
        for (g, e) in got.iter().zip(&x) {
            assert!((g - e).abs() < 1e-13);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let mut a = BandMatrix::<f64>::zeros(2, 1, 1);
        a.set(0, 0, 1.0);
        a.set(0, 1, 2.0);
        a.set(1, 0, 2.0);
        a.set(1, 1, 1.0);
        assert!(a.cholesky().is_err());
    }

    #[test]
    fn transpose_and_transpose_matvec_agree() {
        let mut rng = StdRng::seed_from_u64(11);
        let a = random_band(12, 2, 3, &mut rng);
        let x: Vec<f64> = (0..12).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y1 = a.transpose().matvec(&x);
        let y2 = a.matvec_transpose(&x);
        for (p, q) in y1.iter().zip(&y2) {
            assert!((p - q).abs() < 1e-15);
        }
    }
}
