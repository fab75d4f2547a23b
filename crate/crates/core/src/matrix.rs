//! Small dense square matrices.

use std::fmt;
use std::ops::{Index, IndexMut};

use serde::Serialize;

use crate::scalar::Scalar;

/// Dense row-major `n x n` matrix. Patch counts are small, so nothing here
/// tries to be clever about storage.
#[derive(Clone, PartialEq, Serialize)]
pub struct SquareMatrix<S> {
    n: usize,
    data: Vec<S>,
}

impl<S: Scalar> SquareMatrix<S> {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![S::zero(); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![S::one(); n])
    }

    pub fn from_diagonal(diag: &[S]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Builds a matrix from rows. Panics if the rows are ragged.
    pub fn from_rows(rows: &[Vec<S>]) -> Self {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for r in rows {
            assert_eq!(r.len(), n, "ragged matrix rows");
            data.extend_from_slice(r);
        }
        Self { n, data }
    }

    /// Like [`from_rows`](Self::from_rows) but for `f64` literals.
    pub fn from_f64_rows(rows: &[&[f64]]) -> Self {
        let rows: Vec<Vec<S>> = rows.iter().map(|r| r.iter().map(|&v| S::lit(v)).collect()).collect();
        Self::from_rows(&rows)
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> Vec<Vec<S>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn diagonal(&self) -> Vec<S> {
        (0..self.n).map(|i| self[(i, i)]).collect()
    }

    pub fn map(&self, f: impl Fn(S) -> S) -> Self {
        Self { n: self.n, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)])
    }

    pub fn scaled(&self, c: S) -> Self {
        self.map(|v| v * c)
    }

    pub fn neg(&self) -> Self {
        self.map(|v| -v)
    }

    /// `self + c * I`
    pub fn shifted(&self, c: S) -> Self {
        let mut m = self.clone();
        for i in 0..self.n {
            m[(i, i)] += c;
        }
        m
    }

    pub fn mul_vec(&self, v: &[S]) -> Vec<S> {
        assert_eq!(v.len(), self.n);
        (0..self.n).map(|i| self.row(i).iter().zip(v).fold(S::zero(), |acc, (&a, &b)| acc + a * b)).collect()
    }

    pub fn mul_mat(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        Self::from_fn(self.n, |i, j| (0..self.n).fold(S::zero(), |acc, k| acc + self[(i, k)] * other[(k, j)]))
    }

    /// Infinity norm (maximum absolute row sum).
    pub fn norm_inf(&self) -> S {
        (0..self.n).map(|i| self.row(i).iter().fold(S::zero(), |a, v| a + v.abs())).fold(S::zero(), S::max)
    }

    pub fn max_abs(&self) -> S {
        self.data.iter().fold(S::zero(), |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Off-diagonal entries all nonnegative.
    pub fn is_cooperative(&self) -> bool {
        self.off_diagonal().all(|(_, _, v)| v >= S::zero())
    }

    /// Off-diagonal entries all nonpositive.
    pub fn is_z_matrix(&self) -> bool {
        self.off_diagonal().all(|(_, _, v)| v <= S::zero())
    }

    pub fn off_diagonal(&self) -> impl Iterator<Item = (usize, usize, S)> + '_ {
        let n = self.n;
        (0..n).flat_map(move |i| (0..n).filter(move |&j| j != i).map(move |j| (i, j, self[(i, j)])))
    }

    /// Pivots of Gaussian elimination without row exchanges, stopping at the
    /// first pivot that is not strictly positive. The product of the first
    /// `k` pivots is the `k`-th leading principal minor.
    pub fn leading_pivots(&self) -> Vec<S> {
        let n = self.n;
        let mut a = self.data.clone();
        let mut pivots = Vec::with_capacity(n);
        for k in 0..n {
            let p = a[k * n + k];
            pivots.push(p);
            if !(p > S::zero()) {
                break;
            }
            for i in k + 1..n {
                let factor = a[i * n + k] / p;
                if factor == S::zero() {
                    continue;
                }
                for j in k + 1..n {
                    let v = a[k * n + j];
                    a[i * n + j] -= factor * v;
                }
            }
        }
        pivots
    }

    /// True iff every leading principal minor is strictly positive.
    pub fn leading_minors_positive(&self) -> bool {
        let p = self.leading_pivots();
        p.len() == self.n && p.iter().all(|&v| v > S::zero())
    }

    /// LU factorization with partial pivoting. Returns `None` for an exactly
    /// singular matrix.
    pub fn lu(&self) -> Option<Lu<S>> {
        let n = self.n;
        let mut a = self.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = S::one();
        for k in 0..n {
            let (piv, best) = (k..n).map(|i| (i, a[i * n + k].abs())).fold((k, -S::one()), |acc, x| if x.1 > acc.1 { x } else { acc });
            if best == S::zero() {
                return None;
            }
            if piv != k {
                for j in 0..n {
                    a.swap(k * n + j, piv * n + j);
                }
                perm.swap(k, piv);
                sign = -sign;
            }
            let p = a[k * n + k];
            for i in k + 1..n {
                let f = a[i * n + k] / p;
                a[i * n + k] = f;
                for j in k + 1..n {
                    let v = a[k * n + j];
                    a[i * n + j] -= f * v;
                }
            }
        }
        Some(Lu { n, a, perm, sign })
    }

    pub fn determinant(&self) -> S {
        match self.lu() {
            Some(lu) => lu.determinant(),
            None => S::zero(),
        }
    }

    pub fn solve(&self, b: &[S]) -> Option<Vec<S>> {
        self.lu().map(|lu| lu.solve(b))
    }

    pub fn inverse(&self) -> Option<Self> {
        let lu = self.lu()?;
        let n = self.n;
        let mut inv = Self::zeros(n);
        for j in 0..n {
            let mut e = vec![S::zero(); n];
            e[j] = S::one();
            let col = lu.solve(&e);
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        Some(inv)
    }

    /// Principal submatrix keeping the listed indices.
    pub fn principal_submatrix(&self, keep: &[usize]) -> Self {
        Self::from_fn(keep.len(), |i, j| self[(keep[i], keep[j])])
    }

    pub fn to_f64_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).iter().map(|v| v.as_f64()).collect()).collect()
    }
}

pub struct Lu<S> {
    n: usize,
    a: Vec<S>,
    perm: Vec<usize>,
    sign: S,
}

impl<S: Scalar> Lu<S> {
    pub fn determinant(&self) -> S {
        (0..self.n).fold(self.sign, |d, k| d * self.a[k * self.n + k])
    }

    pub fn solve(&self, b: &[S]) -> Vec<S> {
        let n = self.n;
        let mut x: Vec<S> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for k in 0..i {
                let v = self.a[i * n + k] * x[k];
                x[i] -= v;
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                let v = self.a[i * n + k] * x[k];
                x[i] -= v;
            }
            x[i] /= self.a[i * n + i];
        }
        x
    }
}

impl<S> Index<(usize, usize)> for SquareMatrix<S> {
    type Output = S;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &S {
        &self.data[i * self.n + j]
    }
}

impl<S> IndexMut<(usize, usize)> for SquareMatrix<S> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        &mut self.data[i * self.n + j]
    }
}

impl<S: fmt::Debug> fmt::Debug for SquareMatrix<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.data.chunks(self.n.max(1))).finish()
    }
}

impl<S: Scalar> fmt::Display for SquareMatrix<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n {
            write!(f, "[")?;
            for (j, v) in self.row(i).iter().enumerate() {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{v}")?;
            }
            writeln!(f, "]")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn leading_pivots_multiply_to_minors() {
        let m = SquareMatrix::<f64>::from_f64_rows(&[&[2.0, -1.0, 0.0], &[-1.0, 2.0, -1.0], &[0.0, -1.0, 2.0]]);
        let p = m.leading_pivots();
        assert!((p[0] - 2.0).abs() < 1e-15);
        assert!((p[0] * p[1] - 3.0).abs() < 1e-14);
        assert!((p[0] * p[1] * p[2] - 4.0).abs() < 1e-14);
        assert!(m.leading_minors_positive());
    }

    #[test]
    fn pivots_stop_at_first_nonpositive() {
        let m = SquareMatrix::<f64>::from_f64_rows(&[&[1.0, -3.0], &[-3.0, 1.0]]);
        let p = m.leading_pivots();
        assert_eq!(p.len(), 2);
        assert!(p[1] < 0.0);
        assert!(!m.leading_minors_positive());
        assert!(!SquareMatrix::<f64>::zeros(2).leading_minors_positive());
    }

    #[test]
    fn lu_solves_and_inverts() {
        let m = SquareMatrix::<f64>::from_f64_rows(&[&[0.0, 2.0, 1.0], &[1.0, 1.0, 0.0], &[3.0, 0.0, 1.0]]);
        assert!((m.determinant() - (-5.0)).abs() < 1e-12);
        let inv = m.inverse().unwrap();
        let id = m.mul_mat(&inv);
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((id[(i, j)] - e).abs() < 1e-12);
            }
        }
        assert!(SquareMatrix::<f64>::zeros(3).lu().is_none());
    }

    #[test]
    fn sign_patterns() {
        let coop = SquareMatrix::<f64>::from_f64_rows(&[&[-2.0, 1.0], &[3.5, -2.0]]);
        assert!(coop.is_cooperative());
        assert!(!coop.is_z_matrix());
        assert!(coop.neg().is_z_matrix());
    }
}
