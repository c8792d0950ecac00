use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use super::oscillator::{levels, lowest_levels, EvenOscillator, OscillatorDiscretization};
use crate::quad::{integrate, integrate_batched, Integrand, Tolerance};
use crate::{Error, Result};

/// Relative tolerance for the refinement check in [`quartic_trace`].
pub const TRACE_TOL: f64 = 1e-6;

/// A generic representation `(λ, μ, ν)`, stored as the positive operator
/// `H = -(1/m) d²/dθ² + (m²θ² + ν)²/(4m)`, `m = λ² + μ²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuarticHamiltonian {
    pub lambda: f64,
    pub mu: f64,
    pub nu: f64,
}

impl QuarticHamiltonian {
    pub fn new(lambda: f64, mu: f64, nu: f64) -> Result<Self> {
        if !(lambda.is_finite() && mu.is_finite() && nu.is_finite()) || (lambda == 0.0 && mu == 0.0) {
            return Err(Error::InvalidArgument(format!("representation ({lambda}, {mu}, {nu}) is not generic")));
        }
        Ok(Self { lambda, mu, nu })
    }

    pub fn m(&self) -> f64 {
        self.lambda * self.lambda + self.mu * self.mu
    }

    pub fn oscillator(&self) -> EvenOscillator {
        let m = self.m();
        EvenOscillator { kinetic: 1.0 / m, v4: m * m * m / 4.0, v2: m * self.nu / 2.0, v0: self.nu * self.nu / (4.0 * m) }
    }

    /// `(m^{1/3}, b)` with `H = m^{1/3} K(b)`.
    pub fn reduction(&self) -> (f64, f64) {
        let m = self.m();
        (m.cbrt(), self.nu / m.powf(2.0 / 3.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceValue {
    pub value: f64,
    /// Difference between the two refinement levels plus the cutoff tail.
    pub error: f64,
}

/// Truncation and tolerance settings for the Plancherel integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlancherelQuadrature {
    /// Levels with `t e` above this are dropped; it also fixes the `μ`, `ν`
    /// truncation through ground-state lower bounds.
    pub energy_cutoff: f64,
    pub rel_tol: f64,
    /// Lower `μ` limit; the rest comes from the `μ → 0` limit `π²/(2t²)` of the `ν` integral.
    pub mu_min: f64,
    /// Reduced-form `b` range; the harmonic double-well tail covers `b < b_min`.
    pub b_min: f64,
    pub b_max: f64,
}

impl Default for PlancherelQuadrature {
    fn default() -> Self {
        Self { energy_cutoff: 40.0, rel_tol: 1e-7, mu_min: 0.05, b_min: -1000.0, b_max: 20.0 }
    }
}

impl PlancherelQuadrature {
    pub fn validate(&self) -> Result<()> {
        let ok = self.energy_cutoff >= 20.0
            && self.rel_tol > 0.0
            && self.rel_tol < 1e-2
            && self.mu_min > 0.0
            && self.b_min < -50.0
            && self.b_max >= 10.0;
        if !ok {
            return Err(Error::InvalidArgument(format!("quadrature settings out of range: {self:?}")));
        }
        Ok(())
    }

    /// Wider truncation and tighter tolerance.
    pub fn refined(&self) -> Self {
        Self {
            energy_cutoff: self.energy_cutoff + 10.0,
            rel_tol: self.rel_tol / 100.0,
            mu_min: self.mu_min / 2.0,
            b_min: 2.0 * self.b_min,
            b_max: 1.5 * self.b_max,
        }
    }
}

/// An integral with its error split by origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlancherelValue {
    pub value: f64,
    pub quadrature_error: f64,
    pub truncation_error: f64,
    pub oscillator_error: f64,
    pub evaluations: usize,
}

impl PlancherelValue {
    pub fn error(&self) -> f64 {
        self.quadrature_error + self.truncation_error + self.oscillator_error
    }

    fn scaled(self, c: f64) -> Self {
        Self {
            value: c * self.value,
            quadrature_error: c.abs() * self.quadrature_error,
            truncation_error: c.abs() * self.truncation_error,
            oscillator_error: c.abs() * self.oscillator_error,
            ..self
        }
    }
}

/// A value carried through quadrature together with an error density.
#[derive(Debug, Clone, Copy)]
struct Tracked {
    value: f64,
    error: f64,
}

impl Add for Tracked {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self { value: self.value + o.value, error: self.error + o.error }
    }
}

impl Sub for Tracked {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self { value: self.value - o.value, error: self.error + o.error }
    }
}

impl Mul<f64> for Tracked {
    type Output = Self;
    fn mul(self, w: f64) -> Self {
        Self { value: self.value * w, error: self.error * w.abs() }
    }
}

impl Integrand for Tracked {
    fn zero() -> Self {
        Self { value: 0.0, error: 0.0 }
    }
    fn magnitude(self) -> f64 {
        self.value.abs()
    }
}

/// Keeps the first error raised inside a quadrature closure.
struct FirstError(Mutex<Option<Error>>);

impl FirstError {
    fn new() -> Self {
        Self(Mutex::new(None))
    }

    fn keep<T: Integrand>(&self, r: Result<T>) -> T {
        r.unwrap_or_else(|e| {
            self.0.lock().expect("poisoned").get_or_insert(e);
            T::zero()
        })
    }

    fn check(self) -> Result<()> {
        self.0.into_inner().expect("poisoned").map_or(Ok(()), Err)
    }
}

/// `Σ e^{-t e_k}` over levels with `t e_k ≤ V_min t + cutoff`; the error is
/// the level error propagated through the sum plus a cutoff tail.
fn trace_once(osc: &EvenOscillator, t: f64, cutoff: f64, disc: &OscillatorDiscretization) -> Result<Tracked> {
    let top = osc.min_potential() + cutoff / t;
    let lv = levels(osc, top, disc)?;
    let value: f64 = lv.values.iter().rev().map(|&e| (-t * e).exp()).sum();
    let level_err: f64 = lv.errors.iter().zip(&lv.values).map(|(d, e)| t * d * (-t * e).exp()).sum();
    let tail = (lv.values.len() + 1) as f64 * (-t * top).exp();
    Ok(Tracked { value, error: level_err + tail })
}

/// `tr e^{-tH}` for an even oscillator, checked against the refined
/// discretization.
pub fn oscillator_trace(osc: &EvenOscillator, t: f64, disc: &OscillatorDiscretization) -> Result<TraceValue> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("time {t}")));
    }
    let cutoff = PlancherelQuadrature::default().energy_cutoff;
    let a = trace_once(osc, t, cutoff, disc)?;
    let b = trace_once(osc, t, cutoff, &disc.refined())?;
    let error = (a.value - b.value).abs() + a.error;
    if error > TRACE_TOL * a.value {
        return Err(Error::NotConverged { converged: 0, requested: 1 });
    }
    Ok(TraceValue { value: a.value, error })
}

/// `tr e^{-tH}` for the representation `h`.
pub fn quartic_trace(h: &QuarticHamiltonian, t: f64, disc: &OscillatorDiscretization) -> Result<TraceValue> {
    oscillator_trace(&h.oscillator(), t, disc)
}

/// Smallest ground-state energy of `K(b)` over `b`.
fn reduced_ground_minimum() -> f64 {
    static MIN: OnceLock<f64> = OnceLock::new();
    *MIN.get_or_init(|| {
        let disc = OscillatorDiscretization::hermite(120);
        let e0 = |b: f64| lowest_levels(&EvenOscillator::reduced(b), 1, &disc).map_or(f64::INFINITY, |v| v[0]);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let (mut a, mut c) = (-6.0, 6.0);
        for _ in 0..60 {
            let x1 = c - g * (c - a);
            let x2 = a + g * (c - a);
            if e0(x1) < e0(x2) {
                c = x2;
            } else {
                a = x1;
            }
        }
        e0(0.5 * (a + c))
    })
}

/// `k_t(o) = 2π ∫_0^∞ μ dμ ∫ dν tr e^{-tH(0,μ,ν)}` by direct double quadrature.
pub fn group_heat_origin(t: f64, quad: &PlancherelQuadrature, disc: &OscillatorDiscretization) -> Result<PlancherelValue> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("time {t}")));
    }
    quad.validate()?;
    disc.validate()?;
    let ec = quad.energy_cutoff;
    let e0min = reduced_ground_minimum();
    let mu_max = (ec / (t * e0min)).powf(1.5);
    let inner_tol = Tolerance { abs: 1e-300, rel: 0.1 * quad.rel_tol, max_panels: 400 };
    let errors = FirstError::new();
    let inner = |mu: f64| -> Result<Tracked> {
        let m = mu * mu;
        let tr = |nu: f64| trace_once(&QuarticHamiltonian { lambda: 0.0, mu, nu }.oscillator(), t, ec, disc);
        // ν > 0: e_0 ≥ ν²/(4m)
        let nu_pos = (4.0 * m * ec / t).sqrt();
        let pos = integrate(|nu: f64| errors.keep(tr(nu)), 0.0, nu_pos, inner_tol)?;
        // ν = -s²: e_0 ≈ s in the double-well regime
        let s_max = 1.25 * ec / t;
        let neg = integrate(|s: f64| errors.keep(tr(-s * s)) * (2.0 * s), 0.0, s_max, inner_tol)?;
        Ok(Tracked {
            value: pos.value.value + neg.value.value,
            error: pos.value.error + neg.value.error + pos.error + neg.error,
        })
    };
    let outer = integrate_batched(
        |u: f64| {
            let mu = u.exp();
            errors.keep(inner(mu)) * (2.0 * PI * mu * mu)
        },
        quad.mu_min.ln(),
        mu_max.ln(),
        Tolerance { abs: 1e-300, rel: quad.rel_tol, max_panels: 400 },
    )?;
    errors.check()?;
    // μ < μ_min: the ν integral tends to π²/(2t²)
    let small = 2.0 * PI * PI * PI * quad.mu_min * quad.mu_min / (4.0 * t * t);
    let value = outer.value.value + small;
    Ok(PlancherelValue {
        value,
        quadrature_error: outer.error,
        truncation_error: small + value * (-ec).exp(),
        oscillator_error: outer.value.error,
        evaluations: outer.evaluations,
    })
}

/// `λ(5) = Σ_k (2k+1)^{-5}`.
fn odd_zeta5() -> f64 {
    (0..2000).rev().map(|k| ((2 * k + 1) as f64).powi(-5)).sum()
}

/// `Σ_k e_k(b)^{-5}` for `K(b)`, with a Weyl-law tail above the cutoff.
fn inverse_fifth_moment(b: f64, cutoff: f64, disc: &OscillatorDiscretization) -> Result<Tracked> {
    let osc = EvenOscillator::reduced(b);
    let top = osc.min_potential() + cutoff;
    let lv = levels(&osc, top, disc)?;
    let value: f64 = lv.values.iter().rev().map(|e| e.powi(-5)).sum();
    let level_err: f64 = lv.errors.iter().zip(&lv.values).map(|(d, e)| 5.0 * e.powi(-6) * d).sum();
    // N(E) grows at most linearly above the cutoff
    let tail = lv.values.len().max(1) as f64 * top.powi(-5) / 4.0;
    Ok(Tracked { value: value + tail, error: level_err + tail })
}

/// `∫ Σ_k e_k(b)^{-5} db` over the real line.
pub fn reduced_moment(quad: &PlancherelQuadrature, disc: &OscillatorDiscretization) -> Result<PlancherelValue> {
    quad.validate()?;
    disc.validate()?;
    let cutoff = 1.5 * quad.energy_cutoff;
    let errors = FirstError::new();
    let body = integrate_batched(
        |b: f64| errors.keep(inverse_fifth_moment(b, cutoff, disc)),
        quad.b_min,
        quad.b_max,
        Tolerance { abs: 1e-300, rel: quad.rel_tol, max_panels: 2000 },
    )?;
    errors.check()?;
    // b → -∞: two harmonic wells with levels √|b| (2k+1)
    let bm = -quad.b_min;
    let left = 4.0 / 3.0 * odd_zeta5() * bm.powf(-1.5);
    // b → +∞: e_k ≥ b²/4 + √(b/2)(2k+1) bounds the sum by 16π² b^{-7}
    let right = 8.0 * PI * PI / 3.0 * quad.b_max.powi(-6);
    Ok(PlancherelValue {
        value: body.value.value + left,
        quadrature_error: body.error,
        truncation_error: left * 4.0 * bm.powf(-1.5) + right,
        oscillator_error: body.value.error,
        evaluations: body.evaluations,
    })
}

/// `k_t(o) = 72π t^{-5} ∫ Σ_k e_k(b)^{-5} db`.
pub fn group_heat_origin_reduced(
    t: f64,
    quad: &PlancherelQuadrature,
    disc: &OscillatorDiscretization,
) -> Result<PlancherelValue> {
    Ok(reduced_moment(quad, disc)?.scaled(72.0 * PI * t.powi(-5)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossCheck {
    pub name: String,
    pub a: f64,
    pub b: f64,
    /// `|a - b| / |b|`.
    pub relative_difference: f64,
    /// Allowed relative difference, or the combined relative error bar.
    pub tolerance: f64,
    pub passed: bool,
}

impl CrossCheck {
    fn new(name: &str, a: f64, b: f64, tolerance: f64) -> Self {
        let relative_difference = (a - b).abs() / b.abs();
        Self { name: name.into(), a, b, relative_difference, tolerance, passed: relative_difference <= tolerance }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alpha0Report {
    /// `None` when a cross-check failed.
    pub alpha0: Option<f64>,
    pub error_bar: f64,
    pub convention: String,
    pub quadrature: PlancherelQuadrature,
    pub discretization: OscillatorDiscretization,
    pub reduced_moment: PlancherelValue,
    /// Refinement, reduced vs direct, Hermite vs grid, homogeneity.
    pub cross_checks: Vec<CrossCheck>,
    pub diagnostics: Vec<String>,
}

impl Alpha0Report {
    pub fn check(&self, name: &str) -> Option<&CrossCheck> {
        self.cross_checks.iter().find(|c| c.name == name)
    }
}

pub const ALPHA0_CONVENTION: &str = "alpha0 = k_1(o)/5!, k_t(o) = int tr e^{-tH(l,m,n)} dl dm dn with the unnormalized \
Plancherel density dl dm dn, H = -(1/m) d^2 + (m^2 x^2 + n)^2/(4m), m = l^2 + m^2; the measure-zero representations are omitted";

/// Production estimate of `α₀ = k_1(o)/5! = (3π/5) ∫ Σ_k e_k(b)^{-5} db` with its cross-checks.
pub fn alpha0_estimate(quad: &PlancherelQuadrature, disc: &OscillatorDiscretization) -> Result<Alpha0Report> {
    let factor = 3.0 * PI / 5.0;
    let primary = reduced_moment(quad, disc)?;
    let refined = reduced_moment(&quad.refined(), &disc.refined())?;
    let other = match disc {
        OscillatorDiscretization::HermiteBasis { .. } => OscillatorDiscretization::grid(2000),
        OscillatorDiscretization::Grid { .. } => OscillatorDiscretization::hermite(160),
    };
    let other_backend = reduced_moment(quad, &other)?;
    let direct = group_heat_origin(1.0, quad, disc)?;
    let direct2 = group_heat_origin(2.0, quad, disc)?;

    let alpha0 = factor * primary.value;
    let refinement = (primary.value - refined.value).abs();
    let error_bar = factor * (primary.quadrature_error + primary.truncation_error + primary.oscillator_error + refinement);
    let backend_bar = (primary.error() + refinement + other_backend.error()) / primary.value.abs();
    let checks = vec![
        CrossCheck::new("refinement", primary.value, refined.value, 5e-4),
        CrossCheck::new("reduced_vs_direct", alpha0, direct.value / 120.0, 5e-3),
        CrossCheck::new("hermite_vs_grid", primary.value, other_backend.value, backend_bar),
        CrossCheck::new("homogeneity_ratio", 32.0 * direct2.value / direct.value, 1.0, 1e-2),
    ];
    let diagnostics: Vec<String> = checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| format!("{}: {} vs {} differ by {:.3e} > {:.3e}", c.name, c.a, c.b, c.relative_difference, c.tolerance))
        .collect();
    Ok(Alpha0Report {
        alpha0: diagnostics.is_empty().then_some(alpha0),
        error_bar,
        convention: ALPHA0_CONVENTION.into(),
        quadrature: *quad,
        discretization: *disc,
        reduced_moment: primary,
        cross_checks: checks,
        diagnostics,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeisenbergOracle {
    pub t: f64,
    /// `k_t(0)` from numerically computed fiber traces.
    pub value: PlancherelValue,
    /// The same integral over the closed-form fiber traces `1/(2 sinh |a| t)`.
    pub closed_form_fibers: f64,
    /// `1/(16 t²)`.
    pub exact: f64,
}

/// `k_t(0)` on the Heisenberg group through its Schrödinger representations:
/// fibers `-d² + a²θ²` with Plancherel weight `|a|/(4π²)`.
pub fn heisenberg_group_oracle(t: f64, quad: &PlancherelQuadrature, disc: &OscillatorDiscretization) -> Result<HeisenbergOracle> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("time {t}")));
    }
    quad.validate()?;
    let ec = quad.energy_cutoff;
    let (a_min, a_max) = (4.0 * quad.mu_min / t, 1.25 * ec / t);
    let errors = FirstError::new();
    let body = integrate_batched(
        |a: f64| {
            let osc = EvenOscillator::harmonic(a).expect("positive frequency");
            errors.keep(trace_once(&osc, t, ec, disc)) * (a / (2.0 * PI * PI))
        },
        a_min,
        a_max,
        Tolerance { abs: 1e-300, rel: quad.rel_tol, max_panels: 400 },
    )?;
    errors.check()?;
    // a < a_min: phase-space trace 1/(2at) with the Wigner-Kirkwood factor
    // 1 - t²⟨V''⟩/12, V'' = 2a², integrated against a da
    let x = a_min * t;
    let small = a_min / (4.0 * PI * PI * t) * (1.0 - x * x / 18.0);
    let value = PlancherelValue {
        value: body.value.value + small,
        quadrature_error: body.error,
        truncation_error: small * x.powi(4) / 100.0 + (-ec).exp(),
        oscillator_error: body.value.error,
        evaluations: body.evaluations,
    };
    let closed = integrate(
        |a: f64| if a == 0.0 { 1.0 / (2.0 * t) } else { a / (2.0 * (a * t).sinh()) } / (2.0 * PI * PI),
        0.0,
        60.0 / t,
        Tolerance::new(1e-300, 1e-12),
    )?;
    Ok(HeisenbergOracle { t, value, closed_form_fibers: closed.value, exact: 1.0 / (16.0 * t * t) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hermite() -> OscillatorDiscretization {
        OscillatorDiscretization::hermite(160)
    }

    #[test]
    fn harmonic_trace() {
        let osc = EvenOscillator::harmonic(1.0).unwrap();
        for t in [0.5, 1.0, 2.0] {
            let tr = oscillator_trace(&osc, t, &OscillatorDiscretization::hermite(200)).unwrap();
            assert!((tr.value - 0.5 / t.sinh()).abs() < 1e-6, "{t}: {tr:?}");
        }
    }

    #[test]
    fn depends_only_on_m() {
        let a = quartic_trace(&QuarticHamiltonian::new(3.0, 4.0, -2.0).unwrap(), 1.0, &hermite()).unwrap();
        let b = quartic_trace(&QuarticHamiltonian::new(0.0, 5.0, -2.0).unwrap(), 1.0, &hermite()).unwrap();
        assert!((a.value - b.value).abs() < 1e-8 * a.value);
    }

    #[test]
    fn reduction_rescales_time() {
        for (mu, nu, t) in [(2.0, 1.5, 1.0), (0.7, -3.0, 0.5), (5.0, 40.0, 2.0)] {
            let h = QuarticHamiltonian::new(0.0, mu, nu).unwrap();
            let (scale, b) = h.reduction();
            let direct = quartic_trace(&h, t, &hermite()).unwrap().value;
            let reduced = oscillator_trace(&EvenOscillator::reduced(b), t * scale, &hermite()).unwrap().value;
            assert!((direct - reduced).abs() < 5e-3 * direct, "{mu} {nu}: {direct} vs {reduced}");
        }
    }

    #[test]
    fn trace_positive_decreasing_log_convex() {
        let h = QuarticHamiltonian::new(0.0, 1.3, 0.4).unwrap();
        let ts = [0.5, 0.7, 1.0, 1.4, 2.0];
        let v: Vec<f64> = ts.iter().map(|&t| quartic_trace(&h, t, &hermite()).unwrap().value).collect();
        assert!(v.iter().all(|x| *x > 0.0));
        assert!(v.windows(2).all(|w| w[1] < w[0]));
        let l: Vec<f64> = v.iter().map(|x| x.ln()).collect();
        for i in 1..4 {
            let slope1 = (l[i] - l[i - 1]) / (ts[i] - ts[i - 1]);
            let slope2 = (l[i + 1] - l[i]) / (ts[i + 1] - ts[i]);
            assert!(slope2 >= slope1);
        }
    }

    #[test]
    fn refuses_degenerate_representation() {
        assert!(QuarticHamiltonian::new(0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn heisenberg_oracle_matches_closed_form() {
        let q = PlancherelQuadrature::default();
        let disc = OscillatorDiscretization::hermite(200);
        let k1 = heisenberg_group_oracle(1.0, &q, &disc).unwrap();
        assert!((k1.closed_form_fibers - k1.exact).abs() < 1e-10);
        assert!((k1.value.value - k1.exact).abs() < 1e-4 * k1.exact, "{k1:?}");
        let k2 = heisenberg_group_oracle(2.0, &q, &disc).unwrap();
        assert!((k2.value.value / k1.value.value - 0.25).abs() < 0.005 * 0.25);
    }

    #[test]
    fn reduced_moment_refinement() {
        let q = PlancherelQuadrature::default();
        let a = reduced_moment(&q, &hermite()).unwrap();
        let b = reduced_moment(&q.refined(), &hermite().refined()).unwrap();
        assert!((a.value - b.value).abs() < 1e-6 * b.value, "{a:?} {b:?}");
    }
}
