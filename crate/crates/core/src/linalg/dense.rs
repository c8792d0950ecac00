use faer::complex_native::c64;
use faer::{Mat, Side};
use num_complex::Complex64;

use crate::{Error, Result};

/// Dense complex matrix backed by `faer`.
#[derive(Debug, Clone)]
pub struct DenseMatrix {
    inner: Mat<c64>,
}

#[inline]
fn to_faer(z: Complex64) -> c64 {
    c64::new(z.re, z.im)
}

#[inline]
fn from_faer(z: c64) -> Complex64 {
    Complex64::new(z.re, z.im)
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { inner: Mat::zeros(rows, cols) }
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> Complex64) -> Self {
        Self { inner: Mat::from_fn(rows, cols, |i, j| to_faer(f(i, j))) }
    }

    /// Builds from row-major real entries.
    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::ShapeMismatch("ragged rows".into()));
        }
        Ok(Self::from_fn(r, c, |i, j| Complex64::new(rows[i][j], 0.0)))
    }

    pub fn rows(&self) -> usize {
        self.inner.nrows()
    }

    pub fn cols(&self) -> usize {
        self.inner.ncols()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        from_faer(self.inner.read(i, j))
    }

    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.inner.write(i, j, to_faer(v));
    }

    pub fn adjoint(&self) -> Self {
        Self { inner: self.inner.adjoint().to_owned() }
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols() != other.rows() {
            return Err(Error::ShapeMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows(),
                self.cols(),
                other.rows(),
                other.cols()
            )));
        }
        Ok(Self { inner: &self.inner * &other.inner })
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        let mut m = 0.0_f64;
        for j in 0..self.cols() {
            for i in 0..self.rows() {
                m = m.max(self.get(i, j).norm());
            }
        }
        m
    }

    pub(crate) fn as_faer(&self) -> &Mat<c64> {
        &self.inner
    }
}

/// All eigenvalues of a Hermitian matrix in ascending order (lower triangle read).
pub fn dense_hermitian_eigenvalues(m: &DenseMatrix) -> Vec<f64> {
    assert_eq!(m.rows(), m.cols(), "eigenvalues need a square matrix");
    if m.rows() == 0 {
        return Vec::new();
    }
    let mut ev = m.as_faer().selfadjoint_eigenvalues(Side::Lower);
    ev.sort_by(f64::total_cmp);
    ev
}

/// Eigenvalues (ascending) and the matching orthonormal eigenvectors as columns.
pub fn dense_hermitian_eigen(m: &DenseMatrix) -> (Vec<f64>, DenseMatrix) {
    assert_eq!(m.rows(), m.cols(), "eigendecomposition needs a square matrix");
    let n = m.rows();
    let e = m.as_faer().selfadjoint_eigendecomposition(Side::Lower);
    let s = e.s().column_vector();
    let u = e.u();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| s.read(a).re.total_cmp(&s.read(b).re));
    let vals = order.iter().map(|&k| s.read(k).re).collect();
    let vecs = DenseMatrix::from_fn(n, n, |i, j| from_faer(u.read(i, order[j])));
    (vals, vecs)
}

/// Singular values in descending order.
pub fn singular_values(m: &DenseMatrix) -> Vec<f64> {
    if m.rows() == 0 || m.cols() == 0 {
        return Vec::new();
    }
    let mut s = m.as_faer().singular_values();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Eigenvalues of a real symmetric matrix given row-major, ascending.
pub fn real_symmetric_eigenvalues(n: usize, entries: &[f64]) -> Vec<f64> {
    assert_eq!(entries.len(), n * n);
    if n == 0 {
        return Vec::new();
    }
    let m = Mat::<f64>::from_fn(n, n, |i, j| entries[i * n + j]);
    let mut ev = m.selfadjoint_eigenvalues(Side::Lower);
    ev.sort_by(f64::total_cmp);
    ev
}

/// Least-squares solution of `A x = b` through the thin SVD.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub solution: Vec<f64>,
    /// Singular values of `A`, descending.
    pub singular_values: Vec<f64>,
    /// `(A^T A)^{-1}`, row-major, for standard errors.
    pub normal_inverse: Vec<f64>,
}

impl LeastSquares {
    pub fn condition_number(&self) -> f64 {
        match (self.singular_values.first(), self.singular_values.last()) {
            (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
            _ => f64::INFINITY,
        }
    }
}

/// Solves a real least-squares problem with `A` given row by row.
pub fn least_squares(rows: &[Vec<f64>], b: &[f64]) -> Result<LeastSquares> {
    let m = rows.len();
    let p = rows.first().map_or(0, Vec::len);
    if m != b.len() || rows.iter().any(|r| r.len() != p) || m < p || p == 0 {
        return Err(Error::ShapeMismatch(format!("least squares with {m} rows, {p} columns, {} targets", b.len())));
    }
    let a = Mat::<f64>::from_fn(m, p, |i, j| rows[i][j]);
    let svd = a.thin_svd();
    let (u, s, v) = (svd.u(), svd.s_diagonal(), svd.v());
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&x, &y| s.read(y).total_cmp(&s.read(x)));
    let sv: Vec<f64> = order.iter().map(|&k| s.read(k)).collect();
    let mut solution = vec![0.0; p];
    let mut normal_inverse = vec![0.0; p * p];
    for k in 0..p {
        let sk = s.read(k);
        if sk == 0.0 {
            continue;
        }
        let utb: f64 = (0..m).map(|i| u.read(i, k) * b[i]).sum();
        for j in 0..p {
            solution[j] += v.read(j, k) * utb / sk;
            for l in 0..p {
                normal_inverse[j * p + l] += v.read(j, k) * v.read(l, k) / (sk * sk);
            }
        }
    }
    Ok(LeastSquares { solution, singular_values: sv, normal_inverse })
}
