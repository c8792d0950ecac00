use num_complex::Complex64;
use std::collections::BTreeMap;

use crate::{Error, Result};

/// Compressed sparse row matrix with complex entries.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<Complex64>,
}

impl CsrMatrix {
    /// Builds from `(row, col, value)` triplets; duplicates are summed and
    /// exact zeros dropped.
    pub fn from_triplets(rows: usize, cols: usize, triplets: impl IntoIterator<Item = (usize, usize, Complex64)>) -> Self {
        let mut per_row: Vec<BTreeMap<usize, Complex64>> = vec![BTreeMap::new(); rows];
        for (i, j, v) in triplets {
            assert!(i < rows && j < cols, "triplet ({i}, {j}) outside {rows}x{cols}");
            *per_row[i].entry(j).or_insert(Complex64::new(0.0, 0.0)) += v;
        }
        let mut indptr = Vec::with_capacity(rows + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for row in per_row {
            for (j, v) in row {
                if v != Complex64::new(0.0, 0.0) {
                    indices.push(j);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Self { rows, cols, indptr, indices, values }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, n, (0..n).map(|i| (i, i, Complex64::new(1.0, 0.0))))
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_triplets(rows, cols, std::iter::empty())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Iterates over stored entries in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.rows).flat_map(move |i| {
            (self.indptr[i]..self.indptr[i + 1]).map(move |p| (i, self.indices[p], self.values[p]))
        })
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        let lo = self.indptr[i];
        let hi = self.indptr[i + 1];
        match self.indices[lo..hi].binary_search(&j) {
            Ok(p) => self.values[lo + p],
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::new(0.0, 0.0); self.rows];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[Complex64], y: &mut [Complex64]) {
        assert_eq!(x.len(), self.cols);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = Complex64::new(0.0, 0.0);
            for p in self.indptr[i]..self.indptr[i + 1] {
                s += self.values[p] * x[self.indices[p]];
            }
            *yi = s;
        }
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(self.cols, self.rows, self.triplets().map(|(i, j, v)| (j, i, v.conj())))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= c);
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::ShapeMismatch(format!(
                "cannot add {}x{} and {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(Self::from_triplets(self.rows, self.cols, self.triplets().chain(other.triplets())))
    }

    /// Sparse product `self * other`.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::ShapeMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut indptr = vec![0];
        let mut indices = Vec::new();
        let mut values = Vec::new();
        let mut acc: BTreeMap<usize, Complex64> = BTreeMap::new();
        for i in 0..self.rows {
            acc.clear();
            for p in self.indptr[i]..self.indptr[i + 1] {
                let (k, a) = (self.indices[p], self.values[p]);
                for q in other.indptr[k]..other.indptr[k + 1] {
                    *acc.entry(other.indices[q]).or_insert(Complex64::new(0.0, 0.0)) += a * other.values[q];
                }
            }
            for (&j, &v) in &acc {
                if v != Complex64::new(0.0, 0.0) {
                    indices.push(j);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Ok(Self { rows: self.rows, cols: other.cols, indptr, indices, values })
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    /// Largest entry modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let neg = other.scale(Complex64::new(-1.0, 0.0));
        match self.add(&neg) {
            Ok(d) => d.max_abs(),
            Err(_) => f64::INFINITY,
        }
    }

    /// `max |A - A^H|`; zero for Hermitian matrices.
    pub fn hermitian_defect(&self) -> f64 {
        if self.rows != self.cols {
            return f64::INFINITY;
        }
        self.max_abs_diff(&self.adjoint())
    }

    /// `(A + A^H) / 2`.
    pub fn hermitian_part(&self) -> Self {
        Self::from_triplets(
            self.rows,
            self.cols,
            self.triplets()
                .map(|(i, j, v)| (i, j, 0.5 * v))
                .chain(self.triplets().map(|(i, j, v)| (j, i, 0.5 * v.conj()))),
        )
    }

    /// Upper bound on the spectral norm: the maximum absolute row sum.
    pub fn inf_norm(&self) -> f64 {
        (0..self.rows)
            .map(|i| (self.indptr[i]..self.indptr[i + 1]).map(|p| self.values[p].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> super::DenseMatrix {
        let mut d = super::DenseMatrix::zeros(self.rows, self.cols);
        for (i, j, v) in self.triplets() {
            d.set(i, j, d.get(i, j) + v);
        }
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn duplicates_summed() {
        let m = CsrMatrix::from_triplets(2, 2, [(0, 1, c(1.0, 0.0)), (0, 1, c(2.0, 1.0)), (1, 0, c(0.0, 0.0))]);
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(0, 1), c(3.0, 1.0));
        assert_eq!(m.get(1, 0), c(0.0, 0.0));
    }

    #[test]
    fn product_matches_dense() {
        let a = CsrMatrix::from_triplets(2, 3, [(0, 0, c(1.0, 1.0)), (0, 2, c(2.0, 0.0)), (1, 1, c(0.0, -1.0))]);
        let b = CsrMatrix::from_triplets(3, 2, [(0, 1, c(1.0, 0.0)), (1, 0, c(3.0, 0.0)), (2, 1, c(0.5, 0.5))]);
        let p = a.matmul(&b).unwrap();
        assert_eq!(p.get(0, 1), c(1.0, 1.0) + c(2.0, 0.0) * c(0.5, 0.5));
        assert_eq!(p.get(1, 0), c(0.0, -3.0));
        assert!(a.matmul(&a).is_err());
        let x = vec![c(1.0, 0.0), c(0.0, 1.0), c(2.0, 0.0)];
        let y = a.matvec(&x);
        assert_eq!(y[0], c(1.0, 1.0) + c(4.0, 0.0));
        assert_eq!(y[1], c(1.0, 0.0));
    }

    #[test]
    fn adjoint_and_hermitian_part() {
        let a = CsrMatrix::from_triplets(2, 2, [(0, 1, c(1.0, 2.0)), (1, 1, c(3.0, 0.0))]);
        assert!(a.hermitian_defect() > 0.0);
        let h = a.hermitian_part();
        assert_eq!(h.hermitian_defect(), 0.0);
        assert_eq!(h.get(1, 0), c(0.5, -1.0));
        assert_eq!(a.adjoint().adjoint(), a);
    }
}
