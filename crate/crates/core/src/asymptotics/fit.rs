use serde::{Deserialize, Serialize};

use super::{HeatTraceSamples, MIN_FIT_DECADES};
use crate::linalg::least_squares;
use crate::{Error, Result};

/// Odd coefficients above this fraction of `|a_0|` raise the parity alarm.
pub const PARITY_TOL: f64 = 0.05;

/// Condition numbers above this are refused.
pub const MAX_CONDITION: f64 = 1e8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticFit {
    pub n: usize,
    pub r: usize,
    pub coefficients: Vec<f64>,
    pub exponents: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub fit_window: (f64, f64),
    /// RMS of the relative residuals.
    pub residual: f64,
    pub condition_number: f64,
    /// Odd `j` with `|a_j| > 0.05 |a_0|`.
    pub parity_violations: Vec<usize>,
    pub samples: usize,
}

impl AsymptoticFit {
    pub fn a0(&self) -> f64 {
        self.coefficients[0]
    }

    /// Largest `|a_j| / |a_0|` over odd `j`.
    pub fn max_odd_ratio(&self) -> f64 {
        self.coefficients.iter().skip(1).step_by(2).map(|a| a.abs() / self.a0().abs()).fold(0.0, f64::max)
    }
}

/// Least squares in the basis `t^{(j-n)/r}`, `j = 0..=j_max`, weighted by the
/// inverse trace so residuals are relative.
pub fn fit_heat_coefficients(samples: &HeatTraceSamples, n: usize, r: usize, j_max: usize) -> Result<AsymptoticFit> {
    if r == 0 {
        return Err(Error::InvalidArgument("order must be positive".into()));
    }
    let p = j_max + 1;
    if samples.len() < p + 2 {
        return Err(Error::WindowTooNarrow(format!("{} samples for {p} coefficients", samples.len())));
    }
    let decades = samples.decades();
    if decades < MIN_FIT_DECADES - 1e-9 {
        return Err(Error::WindowTooNarrow(format!(
            "samples span {decades:.2} decades of t in [{:.3e}, {:.3e}], need {MIN_FIT_DECADES}",
            samples.times[0],
            samples.times[samples.len() - 1]
        )));
    }
    let exponents: Vec<f64> = (0..p).map(|j| (j as f64 - n as f64) / r as f64).collect();
    let raw: Vec<Vec<f64>> = samples
        .times
        .iter()
        .zip(&samples.values)
        .map(|(&t, &v)| exponents.iter().map(|e| t.powf(*e) / v).collect())
        .collect();
    let scale: Vec<f64> = (0..p).map(|j| raw.iter().fold(0.0_f64, |m, row| m.max(row[j].abs()))).collect();
    let rows: Vec<Vec<f64>> = raw.iter().map(|row| row.iter().zip(&scale).map(|(x, s)| x / s).collect()).collect();
    let ones = vec![1.0; rows.len()];
    let ls = least_squares(&rows, &ones)?;
    let condition_number = ls.condition_number();
    if !(condition_number <= MAX_CONDITION) {
        return Err(Error::IllConditioned(condition_number));
    }
    let coefficients: Vec<f64> = ls.solution.iter().zip(&scale).map(|(x, s)| x / s).collect();
    let residuals: Vec<f64> =
        rows.iter().map(|row| row.iter().zip(&ls.solution).map(|(a, x)| a * x).sum::<f64>() - 1.0).collect();
    let sse: f64 = residuals.iter().map(|e| e * e).sum();
    let m = rows.len() as f64;
    let sigma2 = sse / (m - p as f64);
    let hc3 = leverage_corrected_variance(&rows, &residuals, &ls.normal_inverse);
    let std_errors = (0..p)
        .map(|j| (sigma2 * ls.normal_inverse[j * p + j]).max(hc3[j]).sqrt() / scale[j])
        .collect();
    let a0 = coefficients[0];
    let parity_violations =
        (1..p).step_by(2).filter(|&j| coefficients[j].abs() > PARITY_TOL * a0.abs()).collect();
    Ok(AsymptoticFit {
        n,
        r,
        coefficients,
        exponents,
        std_errors,
        fit_window: (samples.times[0], samples.times[samples.len() - 1]),
        residual: (sse / m).sqrt(),
        condition_number,
        parity_violations,
        samples: samples.len(),
    })
}

/// Diagonal of the HC3 sandwich covariance `G X^T diag(e_i^2/(1-h_i)^2) X G`
/// with `G = (X^T X)^{-1}`. The heat-trace residuals are systematic and
/// concentrated at the window ends, so the iid estimate alone understates
/// the sensitivity to the end samples.
fn leverage_corrected_variance(rows: &[Vec<f64>], residuals: &[f64], g: &[f64]) -> Vec<f64> {
    let p = rows[0].len();
    let mut var = vec![0.0; p];
    for (x, e) in rows.iter().zip(residuals) {
        let gx: Vec<f64> = (0..p).map(|j| (0..p).map(|l| g[j * p + l] * x[l]).sum()).collect();
        let h: f64 = x.iter().zip(&gx).map(|(a, b)| a * b).sum();
        let w = e * e / (1.0 - h.min(1.0 - 1e-12)).powi(2);
        for j in 0..p {
            var[j] += w * gx[j] * gx[j];
        }
    }
    var
}

#[cfg(test)]
mod tests {
    use super::super::{fit_spectrum, log_spaced, ImageRule, WindowRules};
    use super::*;
    use crate::spectral::{heisenberg_analytic, torus_analytic_count};
    use std::f64::consts::PI;

    #[test]
    fn pure_leading_term() {
        let s = HeatTraceSamples::from_fn(&log_spaced(1e-3, 1e-1, 40), 0, "t^-2", |t| t.powi(-2));
        let fit = fit_heat_coefficients(&s, 4, 2, 3).unwrap();
        assert!((fit.a0() - 1.0).abs() < 1e-6);
        assert!(fit.coefficients[1..].iter().all(|a| a.abs() < 1e-6), "{fit:?}");
        assert!(fit.parity_violations.is_empty());
    }

    #[test]
    fn narrow_window_refused() {
        let s = HeatTraceSamples::from_fn(&log_spaced(1e-2, 1e-1, 40), 0, "t^-2", |t| t.powi(-2));
        assert!(matches!(fit_heat_coefficients(&s, 4, 2, 2), Err(Error::WindowTooNarrow(_))));
    }

    #[test]
    fn ill_conditioned_refused() {
        let s = HeatTraceSamples::from_fn(&log_spaced(1e-3, 1e-1, 60), 0, "t^-2", |t| t.powi(-2));
        assert!(matches!(fit_heat_coefficients(&s, 4, 2, 14), Err(Error::IllConditioned(_))));
    }

    #[test]
    fn parity_alarm_fires() {
        let s = HeatTraceSamples::from_fn(&log_spaced(1e-3, 1e-1, 40), 0, "odd", |t| t.powi(-2) + 0.5 * t.powf(-1.5));
        let fit = fit_heat_coefficients(&s, 4, 2, 2).unwrap();
        assert_eq!(fit.parity_violations, vec![1]);
    }

    #[test]
    fn torus_two_dimensional() {
        let spec = torus_analytic_count(2, 10_000).unwrap();
        let rules = WindowRules { image: Some(ImageRule { length: 1.0, power: 1 }), ..Default::default() };
        let fit = fit_spectrum(&spec, 2, 2, 3, &rules, 60).unwrap();
        let a0 = 1.0 / (4.0 * PI);
        assert!((fit.a0() - a0).abs() < 0.02 * a0, "{fit:?}");
        assert!(fit.coefficients[1].abs() <= 0.05 * a0);
        assert!(fit.parity_violations.is_empty());
    }

    #[test]
    fn heisenberg_landau_levels() {
        let spec = heisenberg_analytic(3.0e4).unwrap();
        let rules = WindowRules { image: Some(ImageRule { length: 2f64.sqrt(), power: 1 }), ..Default::default() };
        let fit = fit_spectrum(&spec, 4, 2, 3, &rules, 60).unwrap();
        assert!((fit.a0() - 0.125).abs() < 0.02 * 0.125, "{fit:?}");
        assert!(fit.parity_violations.is_empty(), "{fit:?}");
    }

    #[test]
    fn shrinking_window_is_stable() {
        let spec = torus_analytic_count(2, 10_000).unwrap();
        let rules = WindowRules { image: Some(ImageRule { length: 1.0, power: 1 }), ..Default::default() };
        let w = super::super::fit_window(&spec, 2, 2, &rules).unwrap();
        let s = super::super::heat_trace(&spec, &log_spaced(w.t_min, w.t_max, 62)).unwrap();
        let full = fit_heat_coefficients(&s, 2, 2, 2).unwrap();
        let inner = fit_heat_coefficients(&s.restrict(s.times[1], s.times[60]), 2, 2, 2).unwrap();
        for j in 0..3 {
            let moved = (full.coefficients[j] - inner.coefficients[j]).abs();
            assert!(moved <= full.std_errors[j].max(1e-12), "j={j}: {moved} vs {}", full.std_errors[j]);
        }
    }
}
