//! Gamma function on the complex plane.

use num_complex::Complex64;
use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `Gamma(z)` by the Lanczos approximation, with reflection for `Re z < 1/2`.
///
/// Relative accuracy is about `1e-14` away from the poles at the nonpositive
/// integers, where the result is infinite.
pub fn gamma(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        // Gamma(z) Gamma(1 - z) = pi / sin(pi z)
        let s = (z * PI).sin();
        if s.norm() == 0.0 {
            return Complex64::new(f64::INFINITY, 0.0);
        }
        return Complex64::new(PI, 0.0) / (s * gamma(1.0 - z));
    }
    let z = z - 1.0;
    let mut x = Complex64::new(LANCZOS_COEFFS[0], 0.0);
    for (i, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        x += *c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * t.powc(z + 0.5) * (-t).exp() * x
}

/// `1 / Gamma(z)`, which is entire; exact zeros at the nonpositive integers.
pub fn rgamma(z: Complex64) -> Complex64 {
    if z.im == 0.0 && z.re <= 0.0 && z.re == z.re.round() {
        return Complex64::new(0.0, 0.0);
    }
    1.0 / gamma(z)
}

/// Real `Gamma(x)` for `x > 0`.
pub fn gamma_real(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn matches_real_gamma() {
        for &x in &[0.1, 0.5, 1.0, 1.5, 2.0, 3.7, 6.0, 11.2] {
            let g = gamma(c(x, 0.0));
            let r = statrs::function::gamma::gamma(x);
            assert!((g.re - r).abs() < 1e-13 * r.abs(), "x={x}: {g} vs {r}");
            assert!(g.im.abs() < 1e-13 * r.abs());
        }
        assert!((gamma(c(-0.5, 0.0)).re + 2.0 * PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn recurrence_and_reflection() {
        for &z in &[c(0.3, 1.2), c(2.5, -0.7), c(-1.3, 0.4), c(4.0, 3.0)] {
            let lhs = gamma(z + 1.0);
            let rhs = z * gamma(z);
            assert!((lhs - rhs).norm() < 1e-12 * lhs.norm(), "{z}");
            let refl = gamma(z) * gamma(1.0 - z) * (z * PI).sin();
            assert!((refl - PI).norm() < 1e-11, "{z}: {refl}");
        }
    }

    #[test]
    fn modulus_on_imaginary_axis() {
        // |Gamma(iy)|^2 = pi / (y sinh(pi y))
        for &y in &[0.5, 1.0, 2.0] {
            let g = gamma(c(0.0, y)).norm_sqr();
            let exact = PI / (y * (PI * y).sinh());
            assert!((g - exact).abs() < 1e-12 * exact);
        }
    }

    #[test]
    fn reciprocal_vanishes_at_poles() {
        assert_eq!(rgamma(c(0.0, 0.0)), c(0.0, 0.0));
        assert_eq!(rgamma(c(-3.0, 0.0)), c(0.0, 0.0));
        assert!((rgamma(c(1.0, 0.0)) - 1.0).norm() < 1e-14);
    }
}
