//! Small dense square matrices and the banded LU used by the Newton solver.

use std::ops::{Index, IndexMut};

use serde::Serialize;

use crate::scalar::Scalar;

/// Row-major `n x n` matrix. Dimensions here are fiber dimensions, so tiny.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Mat<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> Mat<T> {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![T::zero(); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        Self::scaled_identity(n, T::one())
    }

    pub fn scaled_identity(n: usize, s: T) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = s;
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    /// `a b^T`
    pub fn outer(a: &[T], b: &[T]) -> Self {
        Self::from_fn(a.len(), |i, j| a[i] * b[j])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn trace(&self) -> T {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)])
    }

    pub fn scale(&self, s: T) -> Self {
        Self { n: self.n, data: self.data.iter().map(|&x| x * s).collect() }
    }

    pub fn add(&self, o: &Self) -> Self {
        Self { n: self.n, data: self.data.iter().zip(&o.data).map(|(&a, &b)| a + b).collect() }
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self { n: self.n, data: self.data.iter().zip(&o.data).map(|(&a, &b)| a - b).collect() }
    }

    pub fn mul(&self, o: &Self) -> Self {
        let n = self.n;
        Self::from_fn(n, |i, j| (0..n).map(|k| self[(i, k)] * o[(k, j)]).sum())
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        (0..self.n).map(|i| (0..self.n).map(|k| self[(i, k)] * v[k]).sum()).collect()
    }

    /// `a^T M b`
    pub fn bilinear(&self, a: &[T], b: &[T]) -> T {
        let mut s = T::zero();
        for i in 0..self.n {
            for j in 0..self.n {
                s += a[i] * self[(i, j)] * b[j];
            }
        }
        s
    }

    pub fn quad(&self, v: &[T]) -> T {
        self.bilinear(v, v)
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn max_asymmetry(&self) -> T {
        let mut m = T::zero();
        for i in 0..self.n {
            for j in 0..i {
                m = m.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        m
    }

    /// Cholesky factor `L` with `M = L L^T`; `None` unless symmetric positive definite.
    pub fn cholesky(&self) -> Option<Self> {
        let n = self.n;
        let tol = T::lit(1e3) * T::epsilon() * self.max_abs().max(T::one());
        if self.max_asymmetry() > tol {
            return None;
        }
        let mut l = Self::zeros(n);
        for j in 0..n {
            let mut d = self[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > T::zero()) {
                return None;
            }
            let dj = d.sqrt();
            l[(j, j)] = dj;
            for i in j + 1..n {
                let mut s = self[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / dj;
            }
        }
        Some(l)
    }

    pub fn is_positive_definite(&self) -> bool {
        self.cholesky().is_some()
    }

    /// Determinant by partial-pivot elimination.
    pub fn det(&self) -> T {
        let n = self.n;
        let mut a = self.data.clone();
        let mut det = T::one();
        for k in 0..n {
            let p = (k..n).max_by(|&x, &y| a[x * n + k].abs().partial_cmp(&a[y * n + k].abs()).unwrap()).unwrap();
            if a[p * n + k] == T::zero() {
                return T::zero();
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                det = -det;
            }
            let piv = a[k * n + k];
            det *= piv;
            for i in k + 1..n {
                let l = a[i * n + k] / piv;
                for j in k..n {
                    a[i * n + j] = a[i * n + j] - l * a[k * n + j];
                }
            }
        }
        det
    }

    /// Gauss-Jordan inverse with partial pivoting.
    pub fn inverse(&self) -> Option<Self> {
        let n = self.n;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        for k in 0..n {
            let p = (k..n).max_by(|&x, &y| a[(x, k)].abs().partial_cmp(&a[(y, k)].abs()).unwrap()).unwrap();
            if !(a[(p, k)].abs() > T::zero()) {
                return None;
            }
            if p != k {
                for j in 0..n {
                    a.data.swap(k * n + j, p * n + j);
                    inv.data.swap(k * n + j, p * n + j);
                }
            }
            let piv = a[(k, k)];
            for j in 0..n {
                a[(k, j)] = a[(k, j)] / piv;
                inv[(k, j)] = inv[(k, j)] / piv;
            }
            for i in 0..n {
                if i == k {
                    continue;
                }
                let l = a[(i, k)];
                if l == T::zero() {
                    continue;
                }
                for j in 0..n {
                    a[(i, j)] = a[(i, j)] - l * a[(k, j)];
                    inv[(i, j)] = inv[(i, j)] - l * inv[(k, j)];
                }
            }
        }
        Some(inv)
    }
}

impl<T> Index<(usize, usize)> for Mat<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.n + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Mat<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.n + j]
    }
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub fn axpy<T: Scalar>(alpha: T, x: &[T], y: &[T]) -> Vec<T> {
    x.iter().zip(y).map(|(&a, &b)| alpha * a + b).collect()
}

pub fn scaled<T: Scalar>(s: T, v: &[T]) -> Vec<T> {
    v.iter().map(|&x| s * x).collect()
}

/// Banded matrix with `kl` sub- and `ku` super-diagonals, stored row by row.
///
/// Factorized in place without pivoting; the Jacobians it serves are discretized
/// elliptic operators whose diagonals dominate.
#[derive(Debug, Clone)]
pub struct BandedMatrix<T> {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<T>,
}

impl<T: Scalar> BandedMatrix<T> {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = kl + ku + 1;
        Self { n, kl, ku, width, data: vec![T::zero(); n * width] }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        if j + self.kl < i || j > i + self.ku || i >= self.n || j >= self.n {
            None
        } else {
            Some(i * self.width + (j + self.kl - i))
        }
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.slot(i, j).map_or(T::zero(), |s| self.data[s])
    }

    /// Panics if `(i, j)` lies outside the band.
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        let s = self.slot(i, j).expect("entry outside band");
        self.data[s] = v;
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku + 1).min(self.n);
                (lo..hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    /// In-place Doolittle LU; returns the index of the first vanishing pivot on failure.
    pub fn factorize(mut self) -> Result<BandedLu<T>, usize> {
        let (n, kl, ku, w) = (self.n, self.kl, self.ku, self.width);
        let scale = self.data.iter().fold(T::zero(), |m, &x| m.max(x.abs()));
        let tiny = scale * T::epsilon() * T::lit(1e-3);
        for k in 0..n {
            let pivot = self.data[k * w + kl];
            if !(pivot.abs() > tiny) {
                return Err(k);
            }
            let jmax = (k + ku + 1).min(n);
            let imax = (k + kl + 1).min(n);
            for i in k + 1..imax {
                let ik = i * w + (k + kl - i);
                let l = self.data[ik] / pivot;
                self.data[ik] = l;
                if l == T::zero() {
                    continue;
                }
                let (head, tail) = self.data.split_at_mut(i * w);
                let krow = &head[k * w + kl + 1..k * w + kl + 1 + (jmax - k - 1)];
                let start = k + 1 + kl - i;
                let irow = &mut tail[start..start + (jmax - k - 1)];
                for (a, &b) in irow.iter_mut().zip(krow) {
                    *a -= l * b;
                }
            }
        }
        Ok(BandedLu { m: self })
    }
}

#[derive(Debug, Clone)]
pub struct BandedLu<T> {
    m: BandedMatrix<T>,
}

impl<T: Scalar> BandedLu<T> {
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let BandedMatrix { n, kl, ku, width: w, ref data } = self.m;
        let mut y = b.to_vec();
        for i in 0..n {
            let lo = i.saturating_sub(kl);
            let mut s = y[i];
            for j in lo..i {
                s -= data[i * w + (j + kl - i)] * y[j];
            }
            y[i] = s;
        }
        for i in (0..n).rev() {
            let hi = (i + ku + 1).min(n);
            let mut s = y[i];
            for j in i + 1..hi {
                s -= data[i * w + (j + kl - i)] * y[j];
            }
            y[i] = s / data[i * w + kl];
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_and_det_of_small_matrix() {
        let m = Mat::from_fn(3, |i, j| [[4.0, 1.0, 0.5], [1.0, 3.0, 0.2], [0.5, 0.2, 2.0]][i][j]);
        let inv = m.inverse().unwrap();
        let id = m.mul(&inv);
        for i in 0..3 {
            for j in 0..3 {
                let e: f64 = if i == j { 1.0 } else { 0.0 };
                assert!((id[(i, j)] - e).abs() < 1e-14);
            }
        }
        // cofactor expansion
        let det = 4.0 * (3.0 * 2.0 - 0.04) - 1.0 * (2.0 - 0.1) + 0.5 * (0.2 - 1.5);
        assert!((m.det() - det).abs() < 1e-13);
        assert!(m.is_positive_definite());
        assert!(!Mat::from_fn(2, |i, j| if i == j { -1.0 } else { 0.0 }).is_positive_definite());
    }

    #[test]
    fn banded_lu_matches_dense_product() {
        let n = 40;
        let (kl, ku) = (3, 5);
        let mut a = BandedMatrix::<f64>::zeros(n, kl, ku);
        for i in 0..n {
            for j in i.saturating_sub(kl)..(i + ku + 1).min(n) {
                let v = if i == j { 10.0 } else { ((i * 7 + j * 3) % 5) as f64 * 0.3 - 0.6 };
                a.set(i, j, v);
            }
        }
        let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let b = a.mul_vec(&x);
        let lu = a.factorize().unwrap();
        let y = lu.solve(&b);
        for (p, q) in x.iter().zip(&y) {
            assert!((p - q).abs() < 1e-12);
        }
    }
}
