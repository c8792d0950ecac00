use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{AsymptoticFit, HeatTraceSamples};
use crate::quad::{integrate, Tolerance};
use crate::special::{gamma_real, rgamma};
use crate::spectral::{counting_function, Spectrum};
use crate::{Error, Result};

/// Distance to a pole below which evaluation is refused.
pub const POLE_GUARD: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    SpectralSum,
    MellinSplit,
    SpecialValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZetaValue {
    pub z: Complex64,
    pub value: Complex64,
    pub method: Method,
    /// Absolute error estimate.
    pub error: f64,
    /// Method-specific parts: the truncated sum and tail, or the split integrals.
    pub parts: Vec<(String, Complex64)>,
    pub warnings: Vec<String>,
}

/// `ζ(z) = sum λ^{-z}` over the nonzero trusted eigenvalues, plus the
/// integral-comparison tail `N(Λ) d / (z - d) Λ^{-z}` with `d = n/r`; the
/// tail magnitude is the error estimate.
pub fn zeta_spectral(spec: &Spectrum, z: Complex64, n: usize, r: usize) -> ZetaValue {
    let trusted = spec.trusted();
    let d = n as f64 / r as f64;
    let top = trusted.eigenvalues.last().copied().unwrap_or(0.0);
    let terms: Vec<(f64, usize)> = trusted.pairs().filter(|p| p.0 > 0.0).collect();
    let sum: Complex64 = terms.iter().rev().map(|&(v, k)| k as f64 * (-z * v.ln()).exp()).sum();
    let mut warnings = Vec::new();
    let (tail, error) = if z.re > d && top > 0.0 {
        let count = counting_function(&trusted, top) as f64;
        let t = count * d / (z - d) * (-z * top.ln()).exp();
        (t, t.norm())
    } else {
        warnings.push(format!("Re z = {} is not above n/r = {d}; truncated sum only", z.re));
        (Complex64::new(0.0, 0.0), f64::INFINITY)
    };
    ZetaValue {
        z,
        value: sum + tail,
        method: Method::SpectralSum,
        error,
        parts: vec![("partial_sum".into(), sum), ("tail".into(), tail)],
        warnings,
    }
}

/// Poles `(n - j)/r` of the continued `ζ` (those not cancelled by `Γ`).
fn poles(n: usize, r: usize, j_max: usize) -> Vec<(usize, f64)> {
    (0..=j_max)
        .map(|j| (j, (n as f64 - j as f64) / r as f64))
        .filter(|&(_, p)| !(p <= 0.0 && p == p.round()))
        .collect()
}

/// Cubic interpolation of `log(tr - dim ker)` in `log t`.
struct LogInterp {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl LogInterp {
    fn new(samples: &HeatTraceSamples) -> Self {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for (t, e) in samples.times.iter().zip(&samples.excess) {
            x.push(t.ln());
            y.push(if *e > 0.0 { e.ln() } else { f64::NEG_INFINITY });
        }
        Self { x, y }
    }

    /// Every other node, keeping both ends.
    fn coarse(&self) -> Self {
        let n = self.x.len();
        let keep: Vec<usize> = (0..n).filter(|i| i % 2 == 0 || *i == n - 1).collect();
        Self { x: keep.iter().map(|&i| self.x[i]).collect(), y: keep.iter().map(|&i| self.y[i]).collect() }
    }

    fn eval(&self, t: f64) -> f64 {
        let u = t.ln();
        let n = self.x.len();
        let i = self.x.partition_point(|&v| v <= u).clamp(2, n - 2) - 2;
        let idx = [i, i + 1, i + 2, i + 3];
        if idx.iter().any(|&k| self.y[k] == f64::NEG_INFINITY) {
            return 0.0;
        }
        let mut s = 0.0;
        for &a in &idx {
            let mut w = 1.0;
            for &b in &idx {
                if a != b {
                    w *= (u - self.x[b]) / (self.x[a] - self.x[b]);
                }
            }
            s += w * self.y[a];
        }
        s.exp()
    }
}

/// Continued `Γ(z) ζ(z)` without pole checks; returns value, error and parts.
fn gamma_zeta(
    samples: &HeatTraceSamples,
    kernel_dim: usize,
    z: Complex64,
    fit: &AsymptoticFit,
) -> Result<(Complex64, f64, Vec<(String, Complex64)>)> {
    let (t_lo, t_hi) = (samples.times[0], samples.times[samples.len() - 1]);
    if t_hi < 1.0 || samples.len() < 4 {
        return Err(Error::InvalidArgument("Mellin samples must reach t = 1".into()));
    }
    let ker = kernel_dim as f64;
    let tol = Tolerance { abs: 1e-13, rel: 1e-11, max_panels: 4000 };
    let model = |t: f64| -> f64 { fit.coefficients.iter().zip(&fit.exponents).map(|(a, e)| a * t.powf(*e)).sum() };
    let split = |interp: &LogInterp| -> Result<_> {
        // ∫_1^{t_hi} t^{z-1} (tr - ker) dt, in u = ln t
        let upper = integrate(|u: f64| (z * u).exp() * interp.eval(u.exp()), 0.0, t_hi.ln(), tol)?;
        // ∫_{t_lo}^1 t^{z-1} (tr - Σ a_j t^{(j-n)/r}) dt
        let lower = integrate(|u: f64| (z * u).exp() * (interp.eval(u.exp()) + ker - model(u.exp())), t_lo.ln(), 0.0, tol)?;
        Ok((upper, lower))
    };
    let interp = LogInterp::new(samples);
    let (upper, lower) = split(&interp)?;
    let (cu, cl) = split(&interp.coarse())?;
    let sampling = (upper.value - cu.value).norm() + (lower.value - cl.value).norm();
    // beyond t_hi the excess decays like e^{-λ t}; λ from the last two samples
    let m = samples.len();
    let (e1, e2) = (samples.excess[m - 2], samples.excess[m - 1]);
    let beyond = if e2 > 0.0 && e1 > e2 {
        let lam = (e1 / e2).ln() / (samples.times[m - 1] - samples.times[m - 2]);
        e2 * (z * t_hi.ln()).exp() / t_hi / lam
    } else {
        Complex64::new(0.0, 0.0)
    };
    let remainder = |t: f64| interp.eval(t) + ker - model(t);
    // below t_lo the remainder behaves like t^{p}, p = (J + 1 - n)/r
    let p = (fit.coefficients.len() as f64 - fit.n as f64) / fit.r as f64;
    let below = if z.re + p > 0.0 {
        remainder(t_lo).abs() * t_lo.powf(z.re) / (z.re + p)
    } else {
        f64::INFINITY
    };
    let mut pole_sum = -ker / z;
    for (a, e) in fit.coefficients.iter().zip(&fit.exponents) {
        pole_sum += *a / (z + *e);
    }
    let value = upper.value + beyond + lower.value + pole_sum;
    let error = upper.error + lower.error + sampling + beyond.norm() + below;
    let parts = vec![
        ("upper_integral".into(), upper.value + beyond),
        ("lower_integral".into(), lower.value),
        ("pole_terms".into(), pole_sum),
    ];
    Ok((value, error, parts))
}

/// `ζ(z)` from the split Mellin representation
/// `Γ(z)ζ(z) = ∫_1^∞ t^{z-1}(tr - ker) - ker/z + ∫_0^1 t^{z-1}(tr - Σ a_j t^{(j-n)/r}) + Σ a_j/(z - (n-j)/r)`.
///
/// At `z = -l` (nonpositive integer) the special value `(-1)^l l! a'_{n+rl}`
/// is returned, with `a'_n = a_n - dim ker`.
pub fn zeta_mellin(samples: &HeatTraceSamples, kernel_dim: usize, z: Complex64, fit: &AsymptoticFit) -> Result<ZetaValue> {
    let (n, r) = (fit.n, fit.r);
    let j_max = fit.coefficients.len() - 1;
    for (_, pole) in poles(n, r, j_max) {
        let distance = (z - pole).norm();
        if distance < POLE_GUARD {
            return Err(Error::PoleProximity { z: format!("{z}"), pole, distance });
        }
    }
    if z.im.abs() < 1e-12 && z.re <= 1e-12 && (z.re - z.re.round()).abs() < 1e-12 {
        let l = (-z.re.round()) as usize;
        let j = n + r * l;
        if j > j_max {
            return Err(Error::InvalidArgument(format!("ζ(-{l}) needs a_{j}, fit stops at a_{j_max}")));
        }
        let fact: f64 = (1..=l).map(|k| k as f64).product();
        let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
        let a = fit.coefficients[j] - if l == 0 { kernel_dim as f64 } else { 0.0 };
        return Ok(ZetaValue {
            z,
            value: Complex64::new(sign * fact * a, 0.0),
            method: Method::SpecialValue,
            error: fact * fit.std_errors[j],
            parts: vec![(format!("a_{j}"), Complex64::new(fit.coefficients[j], 0.0))],
            warnings: Vec::new(),
        });
    }
    let (g, err, parts) = gamma_zeta(samples, kernel_dim, z, fit)?;
    let rg = rgamma(z);
    Ok(ZetaValue { z, value: g * rg, method: Method::MellinSplit, error: err * rg.norm(), parts, warnings: Vec::new() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZetaResidue {
    pub j: usize,
    pub pole: f64,
    pub value: f64,
    pub error: f64,
}

/// Residue `a'_j / Γ((n-j)/r)` read off the split representation.
pub fn zeta_residue(fit: &AsymptoticFit, kernel_dim: usize, j: usize) -> Result<ZetaResidue> {
    if j >= fit.coefficients.len() {
        return Err(Error::InvalidArgument(format!("residue {j} needs a_{j}, fit stops earlier")));
    }
    let pole = (fit.n as f64 - j as f64) / fit.r as f64;
    if pole <= 0.0 && pole == pole.round() {
        return Ok(ZetaResidue { j, pole, value: 0.0, error: 0.0 });
    }
    let a = fit.coefficients[j] - if j == fit.n { kernel_dim as f64 } else { 0.0 };
    let g = gamma_real(pole).abs().max(f64::MIN_POSITIVE) * gamma_real(pole).signum();
    Ok(ZetaResidue { j, pole, value: a / g, error: fit.std_errors[j] / g.abs() })
}

/// Residue at `(n-j)/r` by limit extrapolation of `(z - z_j) ζ(z)` along the
/// real axis: symmetric differences at `δ` and `δ/2`, then Richardson.
pub fn zeta_residue_by_limit(
    samples: &HeatTraceSamples,
    kernel_dim: usize,
    fit: &AsymptoticFit,
    j: usize,
) -> Result<ZetaResidue> {
    let pole = (fit.n as f64 - j as f64) / fit.r as f64;
    let sym = |delta: f64| -> Result<(f64, f64)> {
        let mut acc = 0.0;
        let mut err = 0.0;
        for s in [delta, -delta] {
            let z = Complex64::new(pole + s, 0.0);
            let (g, e, _) = gamma_zeta(samples, kernel_dim, z, fit)?;
            let rg = rgamma(z);
            acc += s * (g * rg).re;
            err += s.abs() * e * rg.norm();
        }
        Ok((0.5 * acc, 0.5 * err))
    };
    let delta = 0.04;
    let (r1, e1) = sym(delta)?;
    let (r2, e2) = sym(0.5 * delta)?;
    let value = (4.0 * r2 - r1) / 3.0;
    Ok(ZetaResidue { j, pole, value, error: (e1 + 4.0 * e2) / 3.0 + (r2 - r1).abs() / 3.0 })
}

/// `τ(D^{-n/r})` as `r` times the residue of `ζ` at `n/r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NcrReport {
    pub n: usize,
    pub r: usize,
    pub a0: f64,
    /// `r a_0 / Γ(n/r)`.
    pub predicted: f64,
    /// `r` times the residue read off the pole term of the split representation.
    pub tau_direct: f64,
    /// `r` times the residue extrapolated from values of the continued `ζ` near the pole.
    pub tau: f64,
    pub tau_error: f64,
    /// `r (n/r) N(Λ) / Λ^{n/r}` from the counting function, when a spectrum is given.
    pub counting_estimate: Option<f64>,
    pub relative_difference: f64,
}

pub fn ncr_value(
    samples: &HeatTraceSamples,
    kernel_dim: usize,
    fit: &AsymptoticFit,
    spectrum: Option<&Spectrum>,
) -> Result<NcrReport> {
    let (n, r) = (fit.n, fit.r);
    let predicted = r as f64 * fit.a0() / gamma_real(n as f64 / r as f64);
    let res = zeta_residue_by_limit(samples, kernel_dim, fit, 0)?;
    let tau = r as f64 * res.value;
    let tau_direct = r as f64 * zeta_residue(fit, kernel_dim, 0)?.value;
    let counting_estimate = spectrum.map(|s| r as f64 * super::weyl_residue_estimate(s, n, r));
    Ok(NcrReport {
        n,
        r,
        a0: fit.a0(),
        predicted,
        tau_direct,
        tau,
        tau_error: r as f64 * res.error,
        counting_estimate,
        relative_difference: if predicted != 0.0 { (tau - predicted).abs() / predicted.abs() } else { tau.abs() },
    })
}

#[cfg(test)]
mod tests {
    use super::super::{fit_spectrum, fit_window, log_spaced, mellin_samples, ImageRule, WindowRules};
    use super::*;
    use std::f64::consts::PI;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn spectral_sum_examples() {
        let s = Spectrum::synthetic(vec![1.0, 1.0]).unwrap();
        assert!((zeta_spectral(&s, c(3.0), 1, 1).parts[0].1 - 2.0).norm() < 1e-15);
        let s = Spectrum::synthetic(vec![0.0, 4.0]).unwrap();
        assert!((zeta_spectral(&s, c(1.0), 1, 1).parts[0].1 - 0.25).norm() < 1e-15);
    }

    #[test]
    fn basel_within_tail() {
        let s = Spectrum::synthetic((1..=2000).map(|j| j as f64).collect()).unwrap();
        let z = zeta_spectral(&s, c(2.0), 1, 1);
        let exact = PI * PI / 6.0;
        assert!((z.value.re - exact).abs() <= z.error, "{} vs {exact} ± {}", z.value, z.error);
        assert!((z.parts[0].1.re - exact).abs() <= z.error);
    }

    fn torus_setup() -> (Spectrum, HeatTraceSamples, AsymptoticFit) {
        let spec = crate::spectral::torus_analytic_count(2, 10_000).unwrap();
        let rules = WindowRules { image: Some(ImageRule { length: 1.0, power: 1 }), ..Default::default() };
        let fit = fit_spectrum(&spec, 2, 2, 3, &rules, 60).unwrap();
        let w = fit_window(&spec, 2, 2, &rules).unwrap();
        let samples = mellin_samples(&spec, w.t_min, 40).unwrap();
        (spec, samples, fit)
    }

    #[test]
    fn mellin_agrees_with_spectral_sum() {
        let (spec, samples, fit) = torus_setup();
        for z in [c(2.0), c(2.5), Complex64::new(2.0, 1.0), c(3.0)] {
            let a = zeta_spectral(&spec, z, 2, 2);
            let b = zeta_mellin(&samples, spec.kernel_dim, z, &fit).unwrap();
            assert!((a.value - b.value).norm() <= a.error + b.error, "{z}: {} ± {} vs {} ± {}", a.value, a.error, b.value, b.error);
        }
    }

    #[test]
    fn residue_at_leading_pole() {
        let (spec, samples, fit) = torus_setup();
        let exact = 1.0 / (4.0 * PI);
        let direct = zeta_residue(&fit, spec.kernel_dim, 0).unwrap();
        assert!((direct.value - exact).abs() < 0.02 * exact);
        let limit = zeta_residue_by_limit(&samples, spec.kernel_dim, &fit, 0).unwrap();
        assert!((limit.value - exact).abs() < 0.02 * exact, "{limit:?}");
        assert!(matches!(zeta_mellin(&samples, 1, c(1.0005), &fit), Err(Error::PoleProximity { .. })));
    }

    #[test]
    fn special_value_at_zero() {
        let s = HeatTraceSamples::from_fn(&log_spaced(1e-3, 1e-1, 40), 0, "t^-2", |t| t.powi(-2));
        let fit = crate::asymptotics::fit_heat_coefficients(&s, 4, 2, 4).unwrap();
        let z0 = zeta_mellin(&s, 0, c(0.0), &fit).unwrap();
        assert_eq!(z0.method, Method::SpecialValue);
        assert!(z0.value.norm() < 1e-6);
    }

    #[test]
    fn ncr_on_torus() {
        let (spec, samples, fit) = torus_setup();
        let rep = ncr_value(&samples, spec.kernel_dim, &fit, Some(&spec)).unwrap();
        let exact = 1.0 / (2.0 * PI);
        assert!((rep.tau - exact).abs() < 0.02 * exact, "{rep:?}");
        assert!((rep.predicted - exact).abs() < 0.02 * exact);
    }

    #[test]
    fn ncr_vanishes_without_leading_term() {
        // trace with no t^{-n/r} part: e^{-t} on top of an order-zero background
        let times = log_spaced(1e-3, 40.0, 200);
        let s = HeatTraceSamples::from_fn(&times, 0, "regular", |t| 3.0 * (-t).exp());
        let fit = crate::asymptotics::fit_heat_coefficients(&s.restrict(1e-3, 1e-1), 2, 2, 6).unwrap();
        let rep = ncr_value(&s, 0, &fit, None).unwrap();
        assert!(rep.tau.abs() < 1e-5 && rep.predicted.abs() < 1e-5, "{rep:?}");
    }
}
