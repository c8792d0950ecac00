//! Adaptive Gauss–Kronrod quadrature (7-point Gauss, 15-point Kronrod).

use num_complex::Complex64;
use std::ops::{Add, Mul, Sub};

use crate::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Values that can be integrated: reals and complex numbers.
pub trait Integrand: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn magnitude(self) -> f64;
}

impl Integrand for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl Integrand for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

/// Integral estimate with an absolute error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature<T> {
    pub value: T,
    pub error: f64,
    pub evaluations: usize,
}

/// Tolerances and panel budget for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_panels: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { abs: 1e-12, rel: 1e-10, max_panels: 2000 }
    }
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64) -> Self {
        Self { abs, rel, ..Self::default() }
    }
}

/// The 15-point Kronrod nodes and weights mapped to `[a, b]`.
pub fn kronrod_nodes(a: f64, b: f64) -> Vec<(f64, f64)> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut out = Vec::with_capacity(15);
    for i in 0..7 {
        out.push((c - h * XGK[i], h * WGK[i]));
    }
    out.push((c, h * WGK[7]));
    for i in (0..7).rev() {
        out.push((c + h * XGK[i], h * WGK[i]));
    }
    out
}

fn panel<T: Integrand, F: FnMut(f64) -> T>(f: &mut F, a: f64, b: f64) -> (T, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for i in 0..7 {
        let f1 = f(c - h * XGK[i]);
        let f2 = f(c + h * XGK[i]);
        let s = f1 + f2;
        kron = kron + s * WGK[i];
        if i % 2 == 1 {
            gauss = gauss + s * WG[i / 2];
        }
    }
    let err = ((kron - gauss) * h).magnitude();
    (kron * h, err)
}

/// Adaptive bisection on `[a, b]` until the summed error estimate meets
/// `max(abs, rel * |I|)`.
pub fn integrate<T: Integrand, F: FnMut(f64) -> T>(mut f: F, a: f64, b: f64, tol: Tolerance) -> Result<Quadrature<T>> {
    if a == b {
        return Ok(Quadrature { value: T::zero(), error: 0.0, evaluations: 0 });
    }
    let mut panels: Vec<(f64, f64, T, f64)> = Vec::new();
    let (v, e) = panel(&mut f, a, b);
    panels.push((a, b, v, e));
    let mut evaluations = 15;
    loop {
        let total = panels.iter().fold(T::zero(), |s, p| s + p.2);
        let err: f64 = panels.iter().map(|p| p.3).sum();
        let target = tol.abs.max(tol.rel * total.magnitude());
        if err <= target {
            return Ok(Quadrature { value: total, error: err, evaluations });
        }
        if panels.len() >= tol.max_panels {
            return Err(Error::Quadrature { error: err, tolerance: target });
        }
        let (idx, _) = panels
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, p)| if p.3 > best.1 { (i, p.3) } else { best });
        let (pa, pb, _, _) = panels.swap_remove(idx);
        let mid = 0.5 * (pa + pb);
        if mid <= pa || mid >= pb {
            return Err(Error::Quadrature { error: err, tolerance: target });
        }
        let (v1, e1) = panel(&mut f, pa, mid);
        let (v2, e2) = panel(&mut f, mid, pb);
        evaluations += 30;
        panels.push((pa, mid, v1, e1));
        panels.push((mid, pb, v2, e2));
    }
}

fn panel_from_values<T: Integrand>(v: &[T], a: f64, b: f64) -> (T, f64) {
    let h = 0.5 * (b - a);
    let mut kron = v[7] * WGK[7];
    let mut gauss = v[7] * WG[3];
    for i in 0..7 {
        let s = v[i] + v[14 - i];
        kron = kron + s * WGK[i];
        if i % 2 == 1 {
            gauss = gauss + s * WG[i / 2];
        }
    }
    ((kron * h), ((kron - gauss) * h).magnitude())
}

/// [`integrate`] with the nodes of each refinement step evaluated through
/// [`crate::par::map`]; the result does not depend on the thread count.
pub fn integrate_batched<T, F>(f: F, a: f64, b: f64, tol: Tolerance) -> Result<Quadrature<T>>
where
    T: Integrand + Send,
    F: Fn(f64) -> T + Sync,
{
    if a == b {
        return Ok(Quadrature { value: T::zero(), error: 0.0, evaluations: 0 });
    }
    let eval = |ranges: &[(f64, f64)]| -> Vec<(f64, f64, T, f64)> {
        let nodes: Vec<f64> = ranges.iter().flat_map(|&(a, b)| kronrod_nodes(a, b).into_iter().map(|n| n.0)).collect();
        let values = crate::par::map(&nodes, |&x| f(x));
        ranges
            .iter()
            .zip(values.chunks(15))
            .map(|(&(a, b), v)| {
                let (val, err) = panel_from_values(v, a, b);
                (a, b, val, err)
            })
            .collect()
    };
    let mut panels = eval(&[(a, b)]);
    let mut evaluations = 15;
    loop {
        let total = panels.iter().fold(T::zero(), |s, p| s + p.2);
        let err: f64 = panels.iter().map(|p| p.3).sum();
        let target = tol.abs.max(tol.rel * total.magnitude());
        if err <= target {
            return Ok(Quadrature { value: total, error: err, evaluations });
        }
        if panels.len() >= tol.max_panels {
            return Err(Error::Quadrature { error: err, tolerance: target });
        }
        // split every panel carrying more than its share of the excess
        let share = target / panels.len() as f64;
        let (split, keep): (Vec<_>, Vec<_>) = panels.into_iter().partition(|p| p.3 > share);
        let mut halves = Vec::with_capacity(2 * split.len());
        for (pa, pb, _, _) in &split {
            let mid = 0.5 * (pa + pb);
            if mid <= *pa || mid >= *pb {
                return Err(Error::Quadrature { error: err, tolerance: target });
            }
            halves.push((*pa, mid));
            halves.push((mid, *pb));
        }
        evaluations += 15 * halves.len();
        panels = keep;
        panels.extend(eval(&halves));
        panels.sort_by(|x, y| x.0.total_cmp(&y.0));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_exact() {
        // both rules are exact through degree 13, so one panel suffices
        let q = integrate(|x: f64| x.powi(12), -1.0, 1.0, Tolerance::default()).unwrap();
        assert!((q.value - 2.0 / 13.0).abs() < 1e-15);
        assert_eq!(q.evaluations, 15);
    }

    #[test]
    fn smooth_and_peaked() {
        let q = integrate(|x: f64| x.sin(), 0.0, PI, Tolerance::default()).unwrap();
        assert!((q.value - 2.0).abs() < 1e-12);
        let q = integrate(|x: f64| 1.0 / (1e-4 + x * x), -1.0, 1.0, Tolerance::new(1e-12, 1e-12)).unwrap();
        let exact = 2.0 * (1.0 / 1e-2_f64).atan() / 1e-2;
        assert!((q.value - exact).abs() < 1e-9 * exact, "{} vs {exact}", q.value);
    }

    #[test]
    fn endpoint_singularity() {
        let q = integrate(|x: f64| x.sqrt().recip(), 0.0, 1.0, Tolerance::new(1e-10, 1e-10)).unwrap();
        assert!((q.value - 2.0).abs() < 1e-8);
    }

    #[test]
    fn complex_integrand() {
        let q = integrate(|x: f64| Complex64::new(0.0, x).exp(), 0.0, PI, Tolerance::default()).unwrap();
        assert!((q.value - Complex64::new(0.0, 2.0)).norm() < 1e-12);
    }

    #[test]
    fn batched_matches_sequential() {
        let f = |x: f64| 1.0 / (1e-3 + x * x);
        let tol = Tolerance::new(1e-12, 1e-12);
        let a = integrate(f, -1.0, 2.0, tol).unwrap();
        let b = integrate_batched(f, -1.0, 2.0, tol).unwrap();
        assert!((a.value - b.value).abs() < 1e-10 * a.value);
        assert!(b.error <= 1e-12 * b.value.abs());
    }

    #[test]
    fn budget_exhaustion_is_an_error() {
        let tol = Tolerance { abs: 1e-16, rel: 1e-16, max_panels: 3 };
        assert!(matches!(integrate(|x: f64| x.abs().sqrt(), -1.0, 1.0, tol), Err(Error::Quadrature { .. })));
    }
}
