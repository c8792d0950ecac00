use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{dense_hermitian_eigen, CsrMatrix, DenseMatrix};

/// Settings for [`block_lanczos`].
#[derive(Debug, Clone, Copy)]
pub struct LanczosOptions {
    /// Vectors per Krylov block; should be at least the largest multiplicity
    /// among the wanted eigenvalues.
    pub block_size: usize,
    /// Largest Krylov subspace dimension before giving up.
    pub max_dim: usize,
    /// Residual tolerance relative to the matrix norm bound.
    pub tol: f64,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self { block_size: 8, max_dim: 2000, tol: 1e-10, seed: 0x5eed }
    }
}

#[derive(Debug, Clone)]
pub struct LanczosResult {
    /// The `requested` smallest Ritz values, ascending.
    pub eigenvalues: Vec<f64>,
    /// Residual norms `|A y - theta y|` of the returned Ritz pairs.
    pub residuals: Vec<f64>,
    /// Leading Ritz values whose residual met the tolerance.
    pub converged: usize,
    pub requested: usize,
    pub subspace_dim: usize,
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Orthogonalizes `w` against `basis` twice and normalizes it; returns
/// `None` when `w` lies numerically inside the span.
fn orthonormalize(basis: &[Vec<Complex64>], mut w: Vec<Complex64>) -> Option<Vec<Complex64>> {
    let n0 = norm(&w);
    if n0 == 0.0 {
        return None;
    }
    for _ in 0..2 {
        for v in basis {
            let c = dot(v, &w);
            w.iter_mut().zip(v).for_each(|(x, y)| *x -= c * y);
        }
    }
    let n1 = norm(&w);
    if n1 <= 1e-10 * n0 {
        return None;
    }
    w.iter_mut().for_each(|x| *x /= n1);
    Some(w)
}

/// Smallest `k` eigenvalues of a Hermitian sparse matrix by block Lanczos
/// with full reorthogonalization and Rayleigh–Ritz extraction.
///
/// Rank-deficient blocks are refilled with random vectors, so exactly
/// degenerate eigenvalues up to the block size are resolved.
pub fn block_lanczos(a: &CsrMatrix, k: usize, opts: &LanczosOptions) -> LanczosResult {
    let n = a.rows();
    let k = k.min(n);
    let b = opts.block_size.max(1).min(n.max(1));
    let max_dim = opts.max_dim.max(k + b).min(n);
    let anorm = a.inf_norm().max(f64::MIN_POSITIVE);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut random = |len: usize| -> Vec<Complex64> {
        (0..len).map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect()
    };

    let mut v: Vec<Vec<Complex64>> = Vec::new();
    let mut av: Vec<Vec<Complex64>> = Vec::new();
    let mut candidates: Vec<Vec<Complex64>> = (0..b).map(|_| random(n)).collect();
    let mut last_check = 0;

    loop {
        let start = v.len();
        let mut refills = 0;
        let mut queue = std::mem::take(&mut candidates);
        while v.len() - start < b && v.len() < max_dim {
            let w = match queue.pop() {
                Some(w) => w,
                None if refills < 4 * b => {
                    refills += 1;
                    random(n)
                }
                None => break,
            };
            if let Some(q) = orthonormalize(&v, w) {
                av.push(a.matvec(&q));
                v.push(q);
            }
        }
        let m = v.len();
        let exhausted = m == start || m >= max_dim;
        if m >= k && (exhausted || m - last_check >= (m / 8).max(b)) {
            last_check = m;
            let result = ritz(&v, &av, k, anorm, opts.tol);
            if result.converged >= k || exhausted {
                return result;
            }
        } else if exhausted {
            return ritz(&v, &av, k, anorm, opts.tol);
        }
        candidates = av[start..].to_vec();
    }
}

fn ritz(v: &[Vec<Complex64>], av: &[Vec<Complex64>], k: usize, anorm: f64, tol: f64) -> LanczosResult {
    let m = v.len();
    let n = v.first().map_or(0, Vec::len);
    let h = DenseMatrix::from_fn(m, m, |i, j| dot(&v[i], &av[j]));
    let (theta, y) = dense_hermitian_eigen(&h);
    let k = k.min(m);
    let mut residuals = Vec::with_capacity(k);
    for (col, &th) in theta.iter().enumerate().take(k) {
        let mut r = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..m {
            let c = y.get(j, col);
            for i in 0..n {
                r[i] += c * (av[j][i] - th * v[j][i]);
            }
        }
        residuals.push(norm(&r));
    }
    let full = m == n;
    let converged = residuals.iter().take_while(|&&r| full || r <= tol * anorm).count();
    LanczosResult { eigenvalues: theta[..k].to_vec(), residuals, converged, requested: k, subspace_dim: m }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dense_hermitian_eigenvalues;

    fn path_laplacian(n: usize) -> CsrMatrix {
        let one = Complex64::new(1.0, 0.0);
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0 * one));
            t.push((i, (i + 1) % n, -one));
            t.push(((i + 1) % n, i, -one));
        }
        CsrMatrix::from_triplets(n, n, t)
    }

    #[test]
    fn degenerate_cycle_spectrum() {
        // the cycle graph has doubly degenerate eigenvalues
        let a = path_laplacian(300);
        let dense = dense_hermitian_eigenvalues(&a.to_dense());
        let res = block_lanczos(&a, 12, &LanczosOptions { block_size: 4, max_dim: 300, ..Default::default() });
        assert_eq!(res.converged, 12, "{res:?}");
        for (x, y) in res.eigenvalues.iter().zip(&dense) {
            assert!((x - y).abs() < 1e-9, "{x} vs {y}");
        }
    }

    #[test]
    fn small_matrix_is_exact() {
        let a = path_laplacian(6);
        let res = block_lanczos(&a, 6, &LanczosOptions::default());
        let dense = dense_hermitian_eigenvalues(&a.to_dense());
        assert_eq!(res.converged, 6);
        for (x, y) in res.eigenvalues.iter().zip(&dense) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
