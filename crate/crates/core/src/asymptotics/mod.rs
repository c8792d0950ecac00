//! Heat traces, heat-coefficient fits, spectral zeta functions, residues and
//! the McKean–Singer supertrace.
//!
//! For an operator of order `r` on a space of homogeneous dimension `n`,
//! `tr e^{-tA} ~ sum_j a_j t^{(j-n)/r}` as `t -> 0`. The coefficients are fitted
//! inside a window `[t_min, t_max]`: below `t_min` the truncated spectrum
//! misses too much of the trace, above `t_max` lattice images (or the kernel)
//! spoil the small-time expansion.

mod fit;
mod index;
mod zeta;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma_ur;
use std::f64::consts::PI;

use crate::spectral::{counting_function, Spectrum};
use crate::{par, Error, Result};

pub use fit::{fit_heat_coefficients, AsymptoticFit, PARITY_TOL};
pub use index::{mckean_singer, mckean_singer_strict, IndexReport};
pub use zeta::{
    ncr_value, zeta_mellin, zeta_residue, zeta_residue_by_limit, zeta_spectral, Method, NcrReport, ZetaResidue,
    ZetaValue,
};

/// Minimum number of decades a heat-coefficient fit must span.
pub const MIN_FIT_DECADES: f64 = 1.5;

/// Sampled heat trace `tr e^{-tA}` together with `tr e^{-tA} - dim ker A`,
/// which is kept separately to avoid cancellation at large `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatTraceSamples {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Contribution of the nonzero eigenvalues.
    pub excess: Vec<f64>,
    pub kernel_dim: usize,
    pub source: String,
}

/// `count` points spaced evenly in `log t` from `lo` to `hi`.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..count).map(|i| lo * (hi / lo).powf(i as f64 / (count - 1) as f64)).collect(),
    }
}

/// `tr e^{-tA} = sum_j e^{-t λ_j}` over the trusted part of `spec`, with multiplicity.
pub fn heat_trace(spec: &Spectrum, times: &[f64]) -> Result<HeatTraceSamples> {
    if let Some(&t) = times.iter().find(|&&t| !(t > 0.0 && t.is_finite())) {
        return Err(Error::InvalidArgument(format!("heat trace time {t} must be positive")));
    }
    let trusted = spec.trusted();
    let pairs: Vec<(f64, usize)> = trusted.pairs().filter(|p| p.0 > 0.0).collect();
    let excess = par::map(times, |&t| {
        // largest eigenvalues first, so small terms are accumulated before large ones
        pairs.iter().rev().map(|&(v, k)| k as f64 * (-t * v).exp()).sum::<f64>()
    });
    let kernel = trusted.kernel_dim as f64;
    Ok(HeatTraceSamples {
        times: times.to_vec(),
        values: excess.iter().map(|e| e + kernel).collect(),
        excess,
        kernel_dim: trusted.kernel_dim,
        source: format!("{:?}", spec.source),
    })
}

impl HeatTraceSamples {
    /// Samples of an explicitly known trace function.
    pub fn from_fn(times: &[f64], kernel_dim: usize, label: &str, f: impl Fn(f64) -> f64) -> Self {
        let values: Vec<f64> = times.iter().map(|&t| f(t)).collect();
        Self {
            times: times.to_vec(),
            excess: values.iter().map(|v| v - kernel_dim as f64).collect(),
            values,
            kernel_dim,
            source: label.to_string(),
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn decades(&self) -> f64 {
        match (self.times.first(), self.times.last()) {
            (Some(a), Some(b)) => (b / a).log10(),
            _ => 0.0,
        }
    }

    /// Samples with `lo <= t <= hi`.
    pub fn restrict(&self, lo: f64, hi: f64) -> Self {
        let keep: Vec<usize> = (0..self.len()).filter(|&i| self.times[i] >= lo && self.times[i] <= hi).collect();
        Self {
            times: keep.iter().map(|&i| self.times[i]).collect(),
            values: keep.iter().map(|&i| self.values[i]).collect(),
            excess: keep.iter().map(|&i| self.excess[i]).collect(),
            kernel_dim: self.kernel_dim,
            source: self.source.clone(),
        }
    }

    /// Indices `i` where `log v` at `t_i` exceeds the chord through its
    /// neighbours in `log t`-linear interpolation (a convexity violation).
    pub fn log_convexity_violations(&self, tol: f64) -> Vec<usize> {
        (1..self.len().saturating_sub(1))
            .filter(|&i| {
                let (t0, t1, t2) = (self.times[i - 1], self.times[i], self.times[i + 1]);
                let w = (t2 - t1) / (t2 - t0);
                let chord = w * self.values[i - 1].ln() + (1.0 - w) * self.values[i + 1].ln();
                self.values[i].ln() > chord + tol
            })
            .collect()
    }

    /// Whether values are strictly positive and nonincreasing in `t`.
    pub fn is_monotone(&self) -> bool {
        self.values.iter().all(|&v| v > 0.0) && self.values.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-14))
    }
}

/// Lattice-image control for the upper end of the fit window.
///
/// For the `k`-th power of a Laplace-type operator, the first image at
/// distance `length` contributes roughly
/// `exp(-(2k-1) (length/2k)^{2k/(2k-1)} sin(π/(2(2k-1))) t^{-1/(2k-1)})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImageRule {
    pub length: f64,
    pub power: u32,
}

impl ImageRule {
    /// Largest `t` with image contribution below `tol`.
    pub fn t_max(&self, tol: f64) -> f64 {
        let k = self.power.max(1) as f64;
        let q = 2.0 * k - 1.0;
        let c = q * (self.length / (2.0 * k)).powf(2.0 * k / q) * (PI / (2.0 * q)).sin();
        (c / (-tol.ln())).powf(q)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowRules {
    /// Bound on the relative trace mass missed above the trust cutoff.
    pub floor_tol: f64,
    pub image: Option<ImageRule>,
    pub image_tol: f64,
    /// Kernel saturation: require `tr - dim ker > 10 dim ker * kernel_eps`.
    pub kernel_eps: f64,
}

impl Default for WindowRules {
    fn default() -> Self {
        Self { floor_tol: 1e-8, image: None, image_tol: 1e-8, kernel_eps: 1e-6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitWindow {
    pub t_min: f64,
    pub t_max: f64,
    /// Which rule fixed `t_max`: `"image"`, `"kernel"` or `"first_eigenvalue"`.
    pub upper_rule: &'static str,
}

impl FitWindow {
    pub fn decades(&self) -> f64 {
        (self.t_max / self.t_min).log10()
    }
}

/// Solves `Q(a, x) = tol` for `x` (upper regularized incomplete gamma).
fn incomplete_gamma_threshold(a: f64, tol: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 1.0);
    while gamma_ur(a, hi) > tol {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if gamma_ur(a, mid) > tol {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Window for fitting heat coefficients of `spec` (homogeneous dimension `n`, order `r`).
///
/// With Weyl growth `N(λ) ~ c λ^{n/r}`, the mass missed above the cutoff
/// `λ_c` is the fraction `Q(n/r, t λ_c)` of the trace; `t_min` makes it
/// `floor_tol`.
pub fn fit_window(spec: &Spectrum, n: usize, r: usize, rules: &WindowRules) -> Result<FitWindow> {
    let trusted = spec.trusted();
    let lambda_c = trusted.eigenvalues.last().copied().unwrap_or(0.0).min(spec.trust_cutoff);
    let first = trusted.eigenvalues.iter().copied().find(|&v| v > 0.0);
    let (Some(first), true) = (first, lambda_c > 0.0) else {
        return Err(Error::WindowTooNarrow("spectrum has no nonzero trusted eigenvalues".into()));
    };
    let d = n as f64 / r as f64;
    let t_min = incomplete_gamma_threshold(d, rules.floor_tol) / lambda_c;
    let mut t_max = f64::INFINITY;
    let mut upper_rule = "first_eigenvalue";
    if let Some(image) = rules.image {
        t_max = image.t_max(rules.image_tol);
        upper_rule = "image";
    }
    let ker = trusted.kernel_dim as f64;
    if ker > 0.0 {
        // tr - ker ≈ m_1 e^{-t λ_1} must stay above 10 ker ε
        let m1 = trusted.multiplicities[usize::from(trusted.eigenvalues[0] == 0.0)] as f64;
        let t_ker = (m1 / (10.0 * ker * rules.kernel_eps)).ln() / first;
        if t_ker < t_max {
            t_max = t_ker;
            upper_rule = "kernel";
        }
    }
    if t_max.is_infinite() {
        t_max = 1.0 / first;
    }
    Ok(FitWindow { t_min, t_max, upper_rule })
}

/// Fits heat coefficients `a_0..a_J` of a spectrum inside its window.
pub fn fit_spectrum(spec: &Spectrum, n: usize, r: usize, j_max: usize, rules: &WindowRules, samples: usize) -> Result<AsymptoticFit> {
    let w = fit_window(spec, n, r, rules)?;
    if !(w.t_max > w.t_min) || w.decades() < MIN_FIT_DECADES {
        return Err(Error::WindowTooNarrow(format!(
            "fit window [{:.3e}, {:.3e}] ({} rule) spans {:.2} decades, need {MIN_FIT_DECADES}",
            w.t_min,
            w.t_max,
            w.upper_rule,
            if w.t_max > w.t_min { w.decades() } else { 0.0 }
        )));
    }
    let s = heat_trace(spec, &log_spaced(w.t_min, w.t_max, samples))?;
    fit_heat_coefficients(&s, n, r, j_max)
}

/// Samples for Mellin continuation: dense in `log t` from `t_lo` to where
/// the nonzero part of the trace has decayed, and at least to `t = 2`.
pub fn mellin_samples(spec: &Spectrum, t_lo: f64, per_decade: usize) -> Result<HeatTraceSamples> {
    let first = spec.eigenvalues.iter().copied().find(|&v| v > 0.0).unwrap_or(1.0);
    let t_hi = (60.0 / first).max(2.0);
    let count = ((t_hi / t_lo).log10() * per_decade as f64).ceil() as usize + 1;
    heat_trace(spec, &log_spaced(t_lo, t_hi, count.max(8)))
}

/// Residue of `ζ` at `n/r` implied by the counting function at the top of
/// the trusted spectrum: `(n/r) N(Λ) / Λ^{n/r}`.
pub fn weyl_residue_estimate(spec: &Spectrum, n: usize, r: usize) -> f64 {
    let trusted = spec.trusted();
    let lam = trusted.eigenvalues.last().copied().unwrap_or(0.0);
    let d = n as f64 / r as f64;
    d * counting_function(&trusted, lam) as f64 / lam.powf(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::torus_analytic;

    #[test]
    fn trivial_traces() {
        let s = Spectrum::synthetic(vec![1.0]).unwrap();
        let h = heat_trace(&s, &[1.0]).unwrap();
        assert!((h.values[0] - (-1.0f64).exp()).abs() < 1e-15);
        let z = Spectrum::synthetic(vec![0.0, 0.0]).unwrap();
        let h = heat_trace(&z, &[0.1, 5.0]).unwrap();
        assert_eq!(h.values, vec![2.0, 2.0]);
        assert!(heat_trace(&s, &[0.0]).is_err());
    }

    #[test]
    fn poisson_limit_one_dimensional() {
        // Σ e^{-4π²k²t} √(4πt) → 1
        let s = torus_analytic(1, 4.0 * PI * PI * 1e6).unwrap();
        let h = heat_trace(&s, &[1e-4, 1e-3]).unwrap();
        for (t, v) in h.times.iter().zip(&h.values) {
            assert!((v * (4.0 * PI * t).sqrt() - 1.0).abs() < 1e-8, "{t}: {v}");
        }
    }

    #[test]
    fn samples_log_convex_and_monotone() {
        let s = torus_analytic(2, 5000.0).unwrap();
        let h = heat_trace(&s, &log_spaced(1e-3, 1.0, 40)).unwrap();
        assert!(h.is_monotone());
        assert!(h.log_convexity_violations(1e-12).is_empty());
    }

    #[test]
    fn image_rule_reduces_to_gaussian() {
        let rule = ImageRule { length: 1.0, power: 1 };
        let tol: f64 = 1e-8;
        assert!((rule.t_max(tol) - 1.0 / (4.0 * (1.0 / tol).ln())).abs() < 1e-15);
    }

    #[test]
    fn window_floor_for_exponent_one() {
        // Q(1, x) = e^{-x}
        let x = incomplete_gamma_threshold(1.0, 1e-8);
        assert!((x - (1e8f64).ln()).abs() < 1e-9);
    }
}
