use serde::{Deserialize, Serialize};

use crate::linalg::{dense_hermitian_eigenvalues, singular_values, DenseMatrix};
use crate::par;
use crate::{Error, Result};

/// Relative singular-value threshold for kernel dimensions.
pub const RANK_TOL: f64 = 1e-10;
/// Singular values in `[lo, hi] σ_max` make the kernel dimension ambiguous.
pub const AMBIGUOUS_BAND: (f64, f64) = (1e-12, 1e-8);
/// Allowed relative drift of the supertrace across times.
pub const DRIFT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexReport {
    pub rows: usize,
    pub cols: usize,
    /// `(t, tr e^{-tD*D} - tr e^{-tDD*})`.
    pub s_table: Vec<(f64, f64)>,
    pub dim_ker_d: usize,
    pub dim_ker_dstar: usize,
    pub index: i64,
    /// Singular values inside the ambiguous band.
    pub ill_posed: usize,
    /// `max |s(t) - index| / max(1, |index|)`.
    pub max_drift: f64,
    pub constant: bool,
    pub matches_index: bool,
}

fn heat_trace(eigs: &[f64], t: f64) -> f64 {
    // largest eigenvalues first so the near-one kernel terms are added last
    eigs.iter().rev().map(|&l| (-t * l.max(0.0)).exp()).sum()
}

/// Supertrace `s(t)` of `D: C^cols -> C^rows` and the kernel dimensions.
pub fn mckean_singer(d: &DenseMatrix, times: &[f64]) -> Result<IndexReport> {
    if times.is_empty() || times.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
        return Err(Error::InvalidArgument("times must be positive and finite".into()));
    }
    let (rows, cols) = (d.rows(), d.cols());
    let adj = d.adjoint();
    let dsd = dense_hermitian_eigenvalues(&adj.matmul(d)?);
    let dds = dense_hermitian_eigenvalues(&d.matmul(&adj)?);

    let sv = singular_values(d);
    let smax = sv.first().copied().unwrap_or(0.0);
    let rank = sv.iter().filter(|&&s| s > RANK_TOL * smax).count();
    let ill_posed = sv
        .iter()
        .filter(|&&s| s >= AMBIGUOUS_BAND.0 * smax && s <= AMBIGUOUS_BAND.1 * smax)
        .count();
    let dim_ker_d = cols - rank;
    let dim_ker_dstar = rows - rank;
    let index = dim_ker_d as i64 - dim_ker_dstar as i64;

    let s_table: Vec<(f64, f64)> = par::map(times, |&t| (t, heat_trace(&dsd, t) - heat_trace(&dds, t)));
    let scale = (index.abs() as f64).max(1.0);
    let max_drift = s_table.iter().map(|&(_, s)| (s - index as f64).abs() / scale).fold(0.0, f64::max);
    let spread = s_table.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max)
        - s_table.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    Ok(IndexReport {
        rows,
        cols,
        s_table,
        dim_ker_d,
        dim_ker_dstar,
        index,
        ill_posed,
        max_drift,
        constant: spread / scale <= DRIFT_TOL,
        matches_index: max_drift <= DRIFT_TOL,
    })
}

/// Like [`mckean_singer`], but refuses when the kernel dimension is ambiguous.
pub fn mckean_singer_strict(d: &DenseMatrix, times: &[f64]) -> Result<IndexReport> {
    let rep = mckean_singer(d, times)?;
    if rep.ill_posed > 0 {
        return Err(Error::IllPosedKernel(rep.ill_posed));
    }
    Ok(rep)
}
