//! Eigenvalues, counting functions and Weyl-law fits.

use std::f64::consts::PI;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::linalg::{block_lanczos, dense_hermitian_eigenvalues, real_symmetric_eigenvalues, LanczosOptions};
use crate::nilmanifold::DiscretizedOperator;
use crate::special::gamma_real;
use crate::{par, Error, Result};

/// Largest dimension handled by the dense eigensolver.
pub const DENSE_LIMIT: usize = 4096;

/// Relative gap below which neighbouring eigenvalues are merged.
pub const MERGE_TOL: f64 = 1e-8;

/// Eigenvalues below `ZERO_TOL * max` count as kernel.
pub const ZERO_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "detail", rename_all = "snake_case")]
pub enum Source {
    Analytic(String),
    Discretized(String),
    Synthetic(String),
}

/// Distinct eigenvalues in increasing order with multiplicities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub multiplicities: Vec<usize>,
    pub kernel_dim: usize,
    pub source: Source,
    /// Entries above this value are excluded from fits.
    pub trust_cutoff: f64,
    /// Set when an iterative solver stopped before all requested values converged.
    pub partial: bool,
}

impl Spectrum {
    /// Sorts, merges clusters at relative gap `merge_tol` and snaps the
    /// kernel to exactly zero.
    pub fn from_values(values: Vec<f64>, source: Source, trust_cutoff: f64, merge_tol: f64) -> Result<Self> {
        Self::from_pairs(values.into_iter().map(|v| (v, 1)).collect(), source, trust_cutoff, merge_tol)
    }

    /// Like [`from_values`](Self::from_values) for `(eigenvalue, multiplicity)` pairs.
    pub fn from_pairs(mut pairs: Vec<(f64, usize)>, source: Source, trust_cutoff: f64, merge_tol: f64) -> Result<Self> {
        if pairs.iter().any(|p| !p.0.is_finite()) {
            return Err(Error::InvalidArgument("non-finite eigenvalue".into()));
        }
        pairs.retain(|p| p.1 > 0);
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let scale = pairs.iter().fold(0.0_f64, |m, p| m.max(p.0.abs()));
        let zero = ZERO_TOL * scale;
        if let Some(&(lo, _)) = pairs.first() {
            if lo < -zero {
                return Err(Error::InvalidArgument(format!("negative eigenvalue {lo} below -{zero:e}")));
            }
        }
        let mut eigenvalues: Vec<f64> = Vec::new();
        let mut multiplicities: Vec<usize> = Vec::new();
        let mut kernel_dim = 0;
        let mut cluster_sum = 0.0;
        for (v, k) in pairs {
            if v.abs() <= zero {
                kernel_dim += k;
                continue;
            }
            match eigenvalues.last() {
                Some(&last) if (v - last).abs() <= merge_tol * v.abs().max(last.abs()) => {
                    let total = multiplicities.last_mut().unwrap();
                    *total += k;
                    cluster_sum += v * k as f64;
                    *eigenvalues.last_mut().unwrap() = cluster_sum / *total as f64;
                }
                _ => {
                    eigenvalues.push(v);
                    multiplicities.push(k);
                    cluster_sum = v * k as f64;
                }
            }
        }
        if kernel_dim > 0 {
            eigenvalues.insert(0, 0.0);
            multiplicities.insert(0, kernel_dim);
        }
        Ok(Self { eigenvalues, multiplicities, kernel_dim, source, trust_cutoff, partial: false })
    }

    pub fn synthetic(values: Vec<f64>) -> Result<Self> {
        Self::from_values(values, Source::Synthetic("values".into()), f64::INFINITY, MERGE_TOL)
    }

    /// Total count with multiplicity.
    pub fn len(&self) -> usize {
        self.multiplicities.iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Iterates `(eigenvalue, multiplicity)`.
    pub fn pairs(&self) -> impl Iterator<Item = (f64, usize)> + '_ {
        self.eigenvalues.iter().copied().zip(self.multiplicities.iter().copied())
    }

    /// Every eigenvalue repeated by multiplicity.
    pub fn expanded(&self) -> Vec<f64> {
        self.pairs().flat_map(|(v, k)| std::iter::repeat(v).take(k)).collect()
    }

    /// Entries at or below the trust cutoff.
    pub fn trusted(&self) -> Self {
        let keep = self.eigenvalues.iter().take_while(|&&v| v <= self.trust_cutoff).count();
        Self {
            eigenvalues: self.eigenvalues[..keep].to_vec(),
            multiplicities: self.multiplicities[..keep].to_vec(),
            ..self.clone()
        }
    }

    /// The spectrum of `A^p`.
    pub fn power(&self, p: f64) -> Self {
        Self {
            eigenvalues: self.eigenvalues.iter().map(|v| v.powf(p)).collect(),
            trust_cutoff: self.trust_cutoff.powf(p),
            ..self.clone()
        }
    }

    /// Sorted multiset union; the trust cutoff is the smallest of the parts.
    pub fn union(parts: &[Spectrum], source: Source) -> Result<Self> {
        let pairs: Vec<(f64, usize)> = parts.iter().flat_map(Spectrum::pairs).collect();
        let cutoff = parts.iter().map(|s| s.trust_cutoff).fold(f64::INFINITY, f64::min);
        let mut s = Self::from_pairs(pairs, source, cutoff, MERGE_TOL)?;
        s.partial = parts.iter().any(|p| p.partial);
        Ok(s)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["eigenvalue", "multiplicity"])?;
        for (v, k) in self.pairs() {
            w.write_record([format!("{v:e}"), k.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R, source: Source, trust_cutoff: f64) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            eigenvalue: f64,
            multiplicity: usize,
        }
        let mut pairs = Vec::new();
        for row in csv::Reader::from_reader(input).deserialize() {
            let row: Row = row?;
            pairs.push((row.eigenvalue, row.multiplicity));
        }
        Self::from_pairs(pairs, source, trust_cutoff, MERGE_TOL)
    }
}

/// Which eigenvalues to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Count {
    All,
    Smallest(usize),
}

/// Eigenvalues of a discretized operator: dense up to [`DENSE_LIMIT`], block
/// Lanczos beyond (which needs a finite count).
pub fn eigenvalues(op: &DiscretizedOperator, count: Count) -> Result<Spectrum> {
    let dim = op.dim();
    let source = Source::Discretized(op.label.clone());
    let cutoff = op.grid.trust_cutoff();
    if dim <= DENSE_LIMIT {
        let mut ev = if op.matrix.triplets().all(|(_, _, v)| v.im == 0.0) {
            let mut entries = vec![0.0; dim * dim];
            op.matrix.triplets().for_each(|(i, j, v)| entries[i * dim + j] += v.re);
            real_symmetric_eigenvalues(dim, &entries)
        } else {
            dense_hermitian_eigenvalues(&op.matrix.to_dense())
        };
        if let Count::Smallest(k) = count {
            ev.truncate(k);
        }
        return Spectrum::from_values(ev, source, cutoff, MERGE_TOL);
    }
    let Count::Smallest(k) = count else {
        return Err(Error::InvalidArgument(format!("all {dim} eigenvalues requested above the dense limit")));
    };
    eigenvalues_lanczos(op, k, &LanczosOptions { max_dim: (4 * k + 200).min(dim), ..Default::default() })
}

/// Block Lanczos path; non-converged values are dropped and the result flagged partial.
pub fn eigenvalues_lanczos(op: &DiscretizedOperator, k: usize, opts: &LanczosOptions) -> Result<Spectrum> {
    let res = block_lanczos(&op.matrix, k, opts);
    let mut ev = res.eigenvalues;
    ev.truncate(res.converged);
    let mut s = Spectrum::from_values(ev, Source::Discretized(op.label.clone()), op.grid.trust_cutoff(), MERGE_TOL)?;
    s.partial = res.converged < k;
    Ok(s)
}

/// Spectrum of a direct sum, solving the blocks in parallel.
pub fn fibered_spectrum(ops: &[DiscretizedOperator], count: Count, label: &str) -> Result<Spectrum> {
    let parts = par::try_map(ops, |op| eigenvalues(op, count))?;
    Spectrum::union(&parts, Source::Discretized(label.to_string()))
}

/// Number of eigenvalues `<= lambda`, with multiplicity.
pub fn counting_function(spec: &Spectrum, lambda: f64) -> usize {
    let end = spec.eigenvalues.partition_point(|&v| v <= lambda);
    spec.multiplicities[..end].iter().sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeylFit {
    pub exponent_est: f64,
    pub constant_est: f64,
    pub exponent_stderr: f64,
    pub constant_stderr: f64,
    /// Constant with the exponent pinned to `n / r`, when supplied.
    pub constant_pinned: Option<f64>,
    pub constant_pinned_stderr: Option<f64>,
    /// `n / r`, when supplied.
    pub theory_exponent: Option<f64>,
    /// `a0 / Gamma(1 + n/r)`, when `a0` is supplied.
    pub theory_constant: Option<f64>,
    /// `constant_est * Gamma(1 + n/r)`.
    pub implied_a0: Option<f64>,
    pub residual: f64,
    pub window: (f64, f64),
    pub samples: usize,
}

/// Minimum ratio `hi / lo` of a fit window (half a decade).
pub const MIN_WINDOW_RATIO: f64 = 3.162_277_660_168_379_5;

const MIN_EIGENVALUES: usize = 30;
const TARGET_SAMPLES: usize = 200;

/// Least-squares fit of `log N(λ) = α log λ + β` in a window, default
/// `[λ_hi / 30, λ_hi]` with `λ_hi` the trust cutoff (or the largest eigenvalue).
///
/// Samples are log-spaced targets moved to the geometric mean of the two
/// jump points around them, which removes the staircase bias.
pub fn weyl_fit(spec: &Spectrum, homogeneous: Option<(usize, usize)>, a0: Option<f64>, window: Option<(f64, f64)>) -> Result<WeylFit> {
    let top = spec.eigenvalues.last().copied().unwrap_or(0.0);
    let hi_default = spec.trust_cutoff.min(top);
    let (lo, hi) = window.unwrap_or((hi_default / 30.0, hi_default));
    if !(lo > 0.0 && hi > lo) || hi > spec.trust_cutoff {
        return Err(Error::WindowTooNarrow(format!("window [{lo}, {hi}] not inside (0, {}]", spec.trust_cutoff)));
    }
    if hi / lo < MIN_WINDOW_RATIO * (1.0 - 1e-12) {
        return Err(Error::WindowTooNarrow(format!("window [{lo:.4e}, {hi:.4e}] spans less than half a decade")));
    }
    let jumps: Vec<f64> = spec.eigenvalues.iter().copied().filter(|&v| v > 0.0).collect();
    let inside = jumps.iter().filter(|&&v| v >= lo && v <= hi).count();
    let inside_mult = counting_function(spec, hi) - counting_function(spec, lo - f64::MIN_POSITIVE.max(lo * 1e-15));
    if inside_mult < MIN_EIGENVALUES {
        return Err(Error::WindowTooNarrow(format!("only {inside_mult} eigenvalues in [{lo:.4e}, {hi:.4e}]")));
    }
    let mut points: Vec<(f64, f64)> = Vec::new();
    let mut last_jump = usize::MAX;
    for s in 0..TARGET_SAMPLES {
        let target = lo * (hi / lo).powf(s as f64 / (TARGET_SAMPLES - 1) as f64);
        // jump interval [jumps[i], jumps[i + 1]) containing the target
        let i = jumps.partition_point(|&v| v <= target);
        if i == 0 || i >= jumps.len() || i == last_jump {
            continue;
        }
        last_jump = i;
        let mid = (jumps[i - 1] * jumps[i]).sqrt();
        if mid < lo || mid > hi {
            continue;
        }
        let n = counting_function(spec, mid);
        if n > 0 {
            points.push((mid.ln(), (n as f64).ln()));
        }
    }
    if points.len() < 3 || inside < 2 {
        return Err(Error::WindowTooNarrow(format!("only {} distinct samples in window", points.len())));
    }
    let m = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / m;
    let my = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let alpha = sxy / sxx;
    let beta = my - alpha * mx;
    let sse: f64 = points.iter().map(|p| (p.1 - alpha * p.0 - beta).powi(2)).sum();
    let residual = (sse / m).sqrt();
    let s2 = if points.len() > 2 { sse / (m - 2.0) } else { 0.0 };
    let exponent_stderr = (s2 / sxx).sqrt();
    let constant_stderr = beta.exp() * (s2 * (1.0 / m + mx * mx / sxx)).sqrt();
    let theory_exponent = homogeneous.map(|(n, r)| n as f64 / r as f64);
    let pinned = theory_exponent.map(|e| {
        let offsets: Vec<f64> = points.iter().map(|p| p.1 - e * p.0).collect();
        let mean = offsets.iter().sum::<f64>() / m;
        let var = offsets.iter().map(|o| (o - mean).powi(2)).sum::<f64>() / (m - 1.0);
        (mean.exp(), mean.exp() * (var / m).sqrt())
    });
    let g = theory_exponent.map(|e| gamma_real(1.0 + e));
    Ok(WeylFit {
        exponent_est: alpha,
        constant_est: beta.exp(),
        exponent_stderr,
        constant_stderr,
        constant_pinned: pinned.map(|p| p.0),
        constant_pinned_stderr: pinned.map(|p| p.1),
        theory_exponent,
        theory_constant: a0.zip(g).map(|(a, g)| a / g),
        implied_a0: g.map(|g| beta.exp() * g),
        residual,
        window: (lo, hi),
        samples: points.len(),
    })
}

/// Spectrum `{4π² |k|²}` of the unit `d`-torus, all values `<= lambda_max`.
pub fn torus_analytic(d: usize, lambda_max: f64) -> Result<Spectrum> {
    if !(1..=3).contains(&d) {
        return Err(Error::InvalidArgument(format!("torus dimension {d} not in 1..=3")));
    }
    let kmax = (lambda_max / (4.0 * PI * PI)).sqrt().floor() as i64;
    let limit = (lambda_max / (4.0 * PI * PI)).floor() as i64;
    let mut counts: std::collections::BTreeMap<i64, usize> = std::collections::BTreeMap::new();
    let range = -kmax..=kmax;
    let mut acc = |q: i64| {
        if q <= limit {
            *counts.entry(q).or_insert(0) += 1;
        }
    };
    match d {
        1 => range.for_each(|j| acc(j * j)),
        2 => range.clone().for_each(|j| range.clone().for_each(|k| acc(j * j + k * k))),
        _ => range.clone().for_each(|j| {
            range.clone().for_each(|k| range.clone().for_each(|l| acc(j * j + k * k + l * l)))
        }),
    }
    let pairs = counts.into_iter().map(|(q, k)| (4.0 * PI * PI * q as f64, k)).collect();
    Spectrum::from_pairs(pairs, Source::Analytic(format!("torus(d={d})")), lambda_max, MERGE_TOL)
}

/// The first `count` torus eigenvalues, rounded down to a whole degenerate cluster.
pub fn torus_analytic_count(d: usize, count: usize) -> Result<Spectrum> {
    // N(λ) ≈ ω_d (λ / 4π²)^{d/2}; overshoot then trim
    let omega = [2.0, PI, 4.0 * PI / 3.0][d.clamp(1, 3) - 1];
    let mut lam = 4.0 * PI * PI * (1.5 * count as f64 / omega).powf(2.0 / d as f64);
    let mut spec = torus_analytic(d, lam)?;
    while spec.len() < count {
        lam *= 2.0;
        spec = torus_analytic(d, lam)?;
    }
    let mut total = 0;
    let keep = spec
        .multiplicities
        .iter()
        .take_while(|&&k| {
            total += k;
            total <= count
        })
        .count();
    let cutoff = spec.eigenvalues[keep - 1];
    Ok(Spectrum {
        eigenvalues: spec.eigenvalues[..keep].to_vec(),
        multiplicities: spec.multiplicities[..keep].to_vec(),
        trust_cutoff: cutoff,
        ..spec
    })
}

/// Exact sub-Laplacian spectrum of `Γ \ H` with `Γ = √2 Z × √2 Z × Z`, all
/// values `<= lambda_max`: `2π² |k|²` from the zero fiber, and Landau levels
/// `2π |m| (2k + 1)` of multiplicity `2|m|` from fiber `m ≠ 0`.
pub fn heisenberg_analytic(lambda_max: f64) -> Result<Spectrum> {
    let mut pairs = Vec::new();
    let kmax = (lambda_max / (2.0 * PI * PI)).sqrt().floor() as i64;
    for j in -kmax..=kmax {
        for k in -kmax..=kmax {
            let v = 2.0 * PI * PI * (j * j + k * k) as f64;
            if v <= lambda_max {
                pairs.push((v, 1));
            }
        }
    }
    let mut m = 1i64;
    while 2.0 * PI * m as f64 <= lambda_max {
        let mut level = 0i64;
        loop {
            let v = 2.0 * PI * m as f64 * (2 * level + 1) as f64;
            if v > lambda_max {
                break;
            }
            // both signs of m, each with degeneracy 2|m|
            pairs.push((v, 4 * m as usize));
            level += 1;
        }
        m += 1;
    }
    Spectrum::from_pairs(pairs, Source::Analytic("heisenberg_nilmanifold".into()), lambda_max, MERGE_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nilmanifold::{heisenberg_sublaplacian, torus_laplacian};

    #[test]
    fn diag_two_by_two() {
        let s = Spectrum::synthetic(vec![5.0, 0.0]).unwrap();
        assert_eq!(s.eigenvalues, vec![0.0, 5.0]);
        assert_eq!(s.kernel_dim, 1);
    }

    #[test]
    fn torus_n4_counts() {
        let s = eigenvalues(&torus_laplacian(1, 4).unwrap(), Count::All).unwrap();
        assert_eq!(s.expanded().len(), 4);
        assert_eq!(s.multiplicities, vec![1, 2, 1]);
        assert_eq!(counting_function(&s, 32.0), 3);
        assert_eq!(counting_function(&s, 0.0), s.kernel_dim);
        assert!((s.eigenvalues[1] - 32.0).abs() < 1e-10);
    }

    #[test]
    fn square_root_counting() {
        let s = Spectrum::synthetic((1..=100).map(|j| (j * j) as f64).collect()).unwrap();
        for lam in [0.5, 1.0, 7.9, 50.0, 99.0, 100.0] {
            assert_eq!(counting_function(&s, lam), lam.sqrt().floor() as usize);
        }
    }

    #[test]
    fn lanczos_matches_dense_on_fibers() {
        for f in heisenberg_sublaplacian(16, 1).unwrap() {
            let dense = eigenvalues(&f, Count::Smallest(50)).unwrap();
            let lz = eigenvalues_lanczos(&f, 50, &LanczosOptions { block_size: 8, max_dim: 256, ..Default::default() })
                .unwrap();
            assert!(!lz.partial);
            let (a, b) = (dense.expanded(), lz.expanded());
            assert_eq!(a.len(), b.len());
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-8 * x.abs().max(1.0), "{x} vs {y}");
            }
        }
    }

    #[test]
    fn exact_power_law() {
        // λ_j = j^{1/2} gives N(λ) = ⌊λ²⌋
        let s = Spectrum::synthetic((1..=20000).map(|j| (j as f64).sqrt()).collect()).unwrap();
        let fit = weyl_fit(&s, Some((4, 2)), None, Some((20.0, 140.0))).unwrap();
        assert!((fit.exponent_est - 2.0).abs() < 0.01, "{fit:?}");
        assert!((fit.constant_est - 1.0).abs() < 0.02, "{fit:?}");
    }

    #[test]
    fn narrow_window_refused() {
        let s = Spectrum::synthetic((1..=1000).map(|j| j as f64).collect()).unwrap();
        assert!(matches!(weyl_fit(&s, None, None, Some((100.0, 200.0))), Err(Error::WindowTooNarrow(_))));
        assert!(matches!(weyl_fit(&s, None, None, Some((1.0, 20.0))), Err(Error::WindowTooNarrow(_))));
    }

    #[test]
    fn analytic_counts() {
        let t = torus_analytic(2, 4.0 * PI * PI * 2.0).unwrap();
        assert_eq!(t.multiplicities, vec![1, 4, 4]);
        let c = torus_analytic_count(2, 1000).unwrap();
        assert!(c.len() <= 1000 && c.len() > 950);
        let h = heisenberg_analytic(2.0 * PI * 3.0 + 1e-9).unwrap();
        // zero mode, then 2π (m = ±1), 4π (m = ±2), 6π (m = ±1 level 1 and m = ±3); 2π² > 6π
        assert_eq!(counting_function(&h, 2.0 * PI + 1e-9), 1 + 4);
        assert_eq!(counting_function(&h, 2.0 * PI * 3.0 + 1e-9), 1 + 4 + 8 + 4 + 12);
    }

    #[test]
    fn csv_round_trip() {
        let s = torus_analytic(2, 500.0).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let back = Spectrum::read_csv(buf.as_slice(), s.source.clone(), s.trust_cutoff).unwrap();
        assert_eq!(back.multiplicities, s.multiplicities);
        for (a, b) in back.eigenvalues.iter().zip(&s.eigenvalues) {
            assert!((a - b).abs() <= 1e-15 * a.abs());
        }
    }

    #[test]
    fn pinned_constant_on_coarse_torus() {
        let s = eigenvalues(&torus_laplacian(2, 64).unwrap(), Count::All).unwrap();
        let fit = weyl_fit(&s, Some((2, 2)), None, None).unwrap();
        let c = 1.0 / (4.0 * PI);
        let pinned = fit.constant_pinned.unwrap();
        assert!((pinned - c).abs() < 0.05 * c, "{fit:?}");
        assert!(fit.constant_pinned_stderr.unwrap() > 0.0);
    }
}
