//! Small fixed-capacity dense vectors and matrices.
//!
//! Everything in this crate works in dimension `d <= MAX_DIM`, so the types are
//! `Copy` and live on the stack. That keeps the cubature inner loops free of
//! allocation.

use core::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 8;

#[derive(Clone, Copy, PartialEq)]
pub struct Vector {
    dim: usize,
    data: [f64; MAX_DIM],
}

impl core::fmt::Debug for Vector {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_list().entries(self.as_slice()).finish()
    }
}

pub(crate) fn check_dim(d: usize) -> Result<()> {
    if d == 0 || d > MAX_DIM {
        return Err(Error::param("dimension", alloc::format!("must be in 1..={MAX_DIM}, got {d}")));
    }
    Ok(())
}

impl Vector {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1 && dim <= MAX_DIM, "dimension out of range");
        Vector {
            dim,
            data: [0.0; MAX_DIM],
        }
    }

    pub fn from_slice(v: &[f64]) -> Result<Self> {
        check_dim(v.len())?;
        let mut out = Vector::zeros(v.len());
        out.data[..v.len()].copy_from_slice(v);
        Ok(out)
    }

    /// The `i`-th standard basis vector.
    pub fn basis(dim: usize, i: usize) -> Self {
        let mut v = Vector::zeros(dim);
        v.data[i] = 1.0;
        v
    }

    pub fn from_fn(dim: usize, f: impl Fn(usize) -> f64) -> Self {
        let mut v = Vector::zeros(dim);
        for i in 0..dim {
            v.data[i] = f(i);
        }
        v
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data[..self.dim]
    }

    #[inline]
    pub fn dot(&self, other: &Vector) -> f64 {
        debug_assert_eq!(self.dim, other.dim);
        let mut s = 0.0;
        for i in 0..self.dim {
            s += self.data[i] * other.data[i];
        }
        s
    }

    #[inline]
    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    /// Euclidean norm, computed with scaling so huge or tiny entries do not
    /// overflow.
    #[inline]
    pub fn norm(&self) -> f64 {
        let m = self.max_abs();
        if m == 0.0 || !m.is_finite() {
            return m;
        }
        let mut s = 0.0;
        for i in 0..self.dim {
            let t = self.data[i] / m;
            s += t * t;
        }
        m * libm::sqrt(s)
    }

    pub fn max_abs(&self) -> f64 {
        self.as_slice().iter().fold(0.0_f64, |a, &b| a.max(b.abs()))
    }

    /// Unit vector in the direction of `self`; `None` for the zero vector.
    pub fn normalized(&self) -> Option<Vector> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            None
        } else {
            Some(*self * (1.0 / n))
        }
    }

    pub fn is_finite(&self) -> bool {
        self.as_slice().iter().all(|v| v.is_finite())
    }
}

impl Index<usize> for Vector {
    type Output = f64;
    #[inline]
    fn index(&self, i: usize) -> &f64 {
        debug_assert!(i < self.dim);
        &self.data[i]
    }
}

impl IndexMut<usize> for Vector {
    #[inline]
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        debug_assert!(i < self.dim);
        &mut self.data[i]
    }
}

impl Add for Vector {
    type Output = Vector;
    #[inline]
    fn add(mut self, rhs: Vector) -> Vector {
        self += rhs;
        self
    }
}

impl AddAssign for Vector {
    #[inline]
    fn add_assign(&mut self, rhs: Vector) {
        debug_assert_eq!(self.dim, rhs.dim);
        for i in 0..self.dim {
            self.data[i] += rhs.data[i];
        }
    }
}

impl Sub for Vector {
    type Output = Vector;
    #[inline]
    fn sub(mut self, rhs: Vector) -> Vector {
        self -= rhs;
        self
    }
}

impl SubAssign for Vector {
    #[inline]
    fn sub_assign(&mut self, rhs: Vector) {
        debug_assert_eq!(self.dim, rhs.dim);
        for i in 0..self.dim {
            self.data[i] -= rhs.data[i];
        }
    }
}

impl Mul<f64> for Vector {
    type Output = Vector;
    #[inline]
    fn mul(mut self, s: f64) -> Vector {
        for i in 0..self.dim {
            self.data[i] *= s;
        }
        self
    }
}

impl Neg for Vector {
    type Output = Vector;
    #[inline]
    fn neg(self) -> Vector {
        self * -1.0
    }
}

/// Row-major square matrix.
#[derive(Clone, Copy, PartialEq)]
pub struct Matrix {
    dim: usize,
    data: [[f64; MAX_DIM]; MAX_DIM],
}

impl core::fmt::Debug for Matrix {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        let mut l = f.debug_list();
        for i in 0..self.dim {
            l.entry(&&self.data[i][..self.dim]);
        }
        l.finish()
    }
}

impl Matrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1 && dim <= MAX_DIM, "dimension out of range");
        Matrix {
            dim,
            data: [[0.0; MAX_DIM]; MAX_DIM],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::scalar(dim, 1.0)
    }

    pub fn scalar(dim: usize, s: f64) -> Self {
        let mut m = Matrix::zeros(dim);
        for i in 0..dim {
            m.data[i][i] = s;
        }
        m
    }

    pub fn diag(v: &Vector) -> Self {
        let mut m = Matrix::zeros(v.dim());
        for i in 0..v.dim() {
            m.data[i][i] = v[i];
        }
        m
    }

    pub fn from_fn(dim: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut m = Matrix::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m.data[i][j] = f(i, j);
            }
        }
        m
    }

    /// Builds a matrix from rows; all rows must have length `rows.len()`.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let d = rows.len();
        check_dim(d)?;
        let mut m = Matrix::zeros(d);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: r.len(),
                });
            }
            m.data[i][..d].copy_from_slice(r);
        }
        Ok(m)
    }

    pub fn outer(a: &Vector, b: &Vector) -> Self {
        Matrix::from_fn(a.dim(), |i, j| a[i] * b[j])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i][j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i][j] = v;
    }

    pub fn row(&self, i: usize) -> Vector {
        Vector::from_fn(self.dim, |j| self.data[i][j])
    }

    pub fn column(&self, j: usize) -> Vector {
        Vector::from_fn(self.dim, |i| self.data[i][j])
    }

    #[inline]
    pub fn mul_vec(&self, v: &Vector) -> Vector {
        debug_assert_eq!(self.dim, v.dim());
        let mut out = Vector::zeros(self.dim);
        for i in 0..self.dim {
            let mut s = 0.0;
            for j in 0..self.dim {
                s += self.data[i][j] * v[j];
            }
            out[i] = s;
        }
        out
    }

    /// `self' * v`.
    pub fn tr_mul_vec(&self, v: &Vector) -> Vector {
        let mut out = Vector::zeros(self.dim);
        for j in 0..self.dim {
            let mut s = 0.0;
            for i in 0..self.dim {
                s += self.data[i][j] * v[i];
            }
            out[j] = s;
        }
        out
    }

    pub fn mul_mat(&self, other: &Matrix) -> Matrix {
        Matrix::from_fn(self.dim, |i, j| {
            (0..self.dim).map(|k| self.data[i][k] * other.data[k][j]).sum()
        })
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.dim, |i, j| self.data[j][i])
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix::from_fn(self.dim, |i, j| self.data[i][j] * s)
    }

    pub fn add_mat(&self, other: &Matrix) -> Matrix {
        Matrix::from_fn(self.dim, |i, j| self.data[i][j] + other.data[i][j])
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.data[i][i]).sum()
    }

    /// `v' A v`.
    #[inline]
    pub fn quad_form(&self, v: &Vector) -> f64 {
        v.dot(&self.mul_vec(v))
    }

    /// `trace(A B)` without forming the product.
    pub fn trace_product(&self, other: &Matrix) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim {
            for k in 0..self.dim {
                s += self.data[i][k] * other.data[k][i];
            }
        }
        s
    }

    /// The max-row-sum norm `max_i sum_j |a_ij|`.
    pub fn row_sum_norm(&self) -> f64 {
        (0..self.dim)
            .map(|i| self.data[i][..self.dim].iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                s += self.data[i][j] * self.data[i][j];
            }
        }
        libm::sqrt(s)
    }

    pub fn is_finite(&self) -> bool {
        (0..self.dim).all(|i| self.data[i][..self.dim].iter().all(|v| v.is_finite()))
    }

    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        let scale = self.frobenius().max(f64::MIN_POSITIVE);
        for i in 0..self.dim {
            for j in 0..i {
                if (self.data[i][j] - self.data[j][i]).abs() > rel_tol * scale {
                    return false;
                }
            }
        }
        true
    }

    /// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
    ///
    /// Returns eigenvalues in ascending order and the matrix whose columns are
    /// the corresponding orthonormal eigenvectors.
    pub fn symmetric_eigen(&self) -> (Vector, Matrix) {
        let n = self.dim;
        let mut a = *self;
        let mut v = Matrix::identity(n);
        for _sweep in 0..64 {
            let mut off = 0.0;
            for i in 0..n {
                for j in 0..i {
                    off += a.data[i][j] * a.data[i][j];
                }
            }
            if off <= 1e-30 * (a.frobenius() * a.frobenius()).max(f64::MIN_POSITIVE) {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a.data[p][q];
                    if apq == 0.0 {
                        continue;
                    }
                    let theta = (a.data[q][q] - a.data[p][p]) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + libm::sqrt(theta * theta + 1.0));
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / libm::sqrt(t * t + 1.0);
                    let s = t * c;
                    for k in 0..n {
                        let akp = a.data[k][p];
                        let akq = a.data[k][q];
                        a.data[k][p] = c * akp - s * akq;
                        a.data[k][q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a.data[p][k];
                        let aqk = a.data[q][k];
                        a.data[p][k] = c * apk - s * aqk;
                        a.data[q][k] = s * apk + c * aqk;
                    }
                    for k in 0..n {
                        let vkp = v.data[k][p];
                        let vkq = v.data[k][q];
                        v.data[k][p] = c * vkp - s * vkq;
                        v.data[k][q] = s * vkp + c * vkq;
                    }
                }
            }
        }
        // insertion sort of (value, column)
        let mut idx = [0usize; MAX_DIM];
        for (i, slot) in idx.iter_mut().enumerate().take(n) {
            *slot = i;
        }
        for i in 1..n {
            let mut j = i;
            while j > 0 && a.data[idx[j - 1]][idx[j - 1]] > a.data[idx[j]][idx[j]] {
                idx.swap(j - 1, j);
                j -= 1;
            }
        }
        let vals = Vector::from_fn(n, |i| a.data[idx[i]][idx[i]]);
        let vecs = Matrix::from_fn(n, |r, c| v.data[r][idx[c]]);
        (vals, vecs)
    }

    /// Symmetric square root of a positive semidefinite matrix.
    ///
    /// Eigenvalues below `-tol * max|λ|` are rejected; small negative ones from
    /// rounding are clamped to zero.
    pub fn sqrt_psd(&self, tol: f64) -> Result<Matrix> {
        let (vals, vecs) = self.symmetric_eigen();
        let scale = vals.max_abs();
        let n = self.dim;
        let mut out = Matrix::zeros(n);
        for k in 0..n {
            let lam = vals[k];
            if lam < -tol * scale.max(1e-300) {
                return Err(Error::param("diffusion", "matrix is not positive semidefinite"));
            }
            let s = libm::sqrt(lam.max(0.0));
            if s == 0.0 {
                continue;
            }
            for i in 0..n {
                for j in 0..n {
                    out.data[i][j] += s * vecs.data[i][k] * vecs.data[j][k];
                }
            }
        }
        Ok(out)
    }
}

/// Completes `e` (a unit vector) to an orthonormal basis; column 0 of the
/// returned matrix is `e`.
pub fn orthonormal_frame(e: &Vector) -> Matrix {
    let n = e.dim();
    let mut cols: [Vector; MAX_DIM] = [Vector::zeros(n); MAX_DIM];
    cols[0] = *e;
    let mut filled = 1;
    // Gram-Schmidt against the standard basis, starting from the axis least
    // aligned with e for stability.
    let mut order = [0usize; MAX_DIM];
    for (i, o) in order.iter_mut().enumerate().take(n) {
        *o = i;
    }
    order[..n].sort_by(|&a, &b| e[a].abs().partial_cmp(&e[b].abs()).unwrap_or(core::cmp::Ordering::Equal));
    for &k in order.iter().take(n) {
        if filled == n {
            break;
        }
        let mut v = Vector::basis(n, k);
        for _ in 0..2 {
            for c in cols.iter().take(filled) {
                let proj = v.dot(c);
                v -= *c * proj;
            }
        }
        if let Some(u) = v.normalized() {
            if v.norm() > 1e-8 {
                cols[filled] = u;
                filled += 1;
            }
        }
    }
    Matrix::from_fn(n, |i, j| cols[j][i])
}
