use std::f64::consts::PI;

use num_complex::Complex64;

use super::{Center, DiscretizedOperator, Manifold, QuotientGrid};
use crate::linalg::CsrMatrix;
use crate::{par, Error, Result};

/// Default horizontal lattice period, giving `vol(Γ \ H) = 2`.
pub const HEISENBERG_PERIOD: f64 = std::f64::consts::SQRT_2;

const FLUX_TOL: f64 = 1e-9;

fn flux_check(m: i64, period: f64) -> Result<()> {
    let flux = m as f64 * period * period;
    let defect = (flux - flux.round()).abs();
    if defect > FLUX_TOL {
        return Err(Error::FluxQuantization { fiber: m, defect });
    }
    Ok(())
}

/// Right translations by `exp(h X)` and `exp(h Y)` on the grid, plus the
/// discretized center field `Z = ∂z`.
pub(crate) fn translations(grid: &QuotientGrid) -> Result<(Vec<CsrMatrix>, CsrMatrix)> {
    let Manifold::HeisenbergNilmanifold { period } = grid.manifold else {
        return Err(Error::InvalidArgument("grid is not a Heisenberg nilmanifold grid".into()));
    };
    let n = grid.resolution;
    let h = grid.spacing[0];
    match grid.center {
        Some(Center::Fiber { m }) => {
            flux_check(m, period)?;
            let mf = m as f64;
            let idx = |j: usize, k: usize| k * n + j;
            let mut rx = Vec::with_capacity(n * n);
            let mut ry = Vec::with_capacity(n * n);
            for k in 0..n {
                for j in 0..n {
                    let (x, y) = (j as f64 * h, k as f64 * h);
                    // (x, y, z)(h, 0, 0) = (x + h, y, z - h y / 2)
                    let wrap_x = if j + 1 == n { period } else { 0.0 };
                    let phase_x = -PI * mf * (h + wrap_x) * y;
                    rx.push((idx(j, k), idx((j + 1) % n, k), Complex64::from_polar(1.0, phase_x)));
                    // (x, y, z)(0, h, 0) = (x, y + h, z + h x / 2)
                    let wrap_y = if k + 1 == n { period } else { 0.0 };
                    let phase_y = PI * mf * (h + wrap_y) * x;
                    ry.push((idx(j, k), idx(j, (k + 1) % n), Complex64::from_polar(1.0, phase_y)));
                }
            }
            let dim = n * n;
            let z = CsrMatrix::identity(dim).scale(Complex64::new(0.0, 2.0 * PI * mf));
            Ok((vec![CsrMatrix::from_triplets(dim, dim, rx), CsrMatrix::from_triplets(dim, dim, ry)], z))
        }
        Some(Center::Sampled { m_max }) => {
            let nz = 2 * m_max + 1;
            let modes: Vec<f64> = (-(m_max as i64)..=m_max as i64).map(|m| m as f64).collect();
            // trigonometric interpolation: g(z_l + δ) = sum_l' T(δ)_{l l'} g(z_l')
            let shift = |delta: f64| -> Vec<Complex64> {
                let mut t = vec![Complex64::new(0.0, 0.0); nz * nz];
                for l in 0..nz {
                    for lp in 0..nz {
                        let dz = (l as f64 - lp as f64) / nz as f64 + delta;
                        t[l * nz + lp] = modes.iter().map(|&m| Complex64::from_polar(1.0, 2.0 * PI * m * dz)).sum::<Complex64>()
                            / nz as f64;
                    }
                }
                t
            };
            let idx = |j: usize, k: usize, l: usize| (l * n + k) * n + j;
            let mut rx = Vec::new();
            let mut ry = Vec::new();
            for k in 0..n {
                for j in 0..n {
                    let (x, y) = (j as f64 * h, k as f64 * h);
                    let wrap_x = if j + 1 == n { period } else { 0.0 };
                    let tx = shift(-0.5 * (h + wrap_x) * y);
                    let wrap_y = if k + 1 == n { period } else { 0.0 };
                    let ty = shift(0.5 * (h + wrap_y) * x);
                    for l in 0..nz {
                        for lp in 0..nz {
                            rx.push((idx(j, k, l), idx((j + 1) % n, k, lp), tx[l * nz + lp]));
                            ry.push((idx(j, k, l), idx(j, (k + 1) % n, lp), ty[l * nz + lp]));
                        }
                    }
                }
            }
            let mut zt = Vec::new();
            for l in 0..nz {
                for lp in 0..nz {
                    let dz = (l as f64 - lp as f64) / nz as f64;
                    let d: Complex64 = modes
                        .iter()
                        .map(|&m| Complex64::new(0.0, 2.0 * PI * m) * Complex64::from_polar(1.0, 2.0 * PI * m * dz))
                        .sum::<Complex64>()
                        / nz as f64;
                    for p in 0..n * n {
                        zt.push((l * n * n + p, lp * n * n + p, d));
                    }
                }
            }
            let dim = grid.points();
            Ok((
                vec![CsrMatrix::from_triplets(dim, dim, rx), CsrMatrix::from_triplets(dim, dim, ry)],
                CsrMatrix::from_triplets(dim, dim, zt),
            ))
        }
        None => Err(Error::InvalidArgument("Heisenberg grid needs a center treatment".into())),
    }
}

/// `F^H F` for the link difference `F = (R - I) / h`, i.e. the discretization of `-X^2`.
pub(crate) fn link_square(r: &CsrMatrix, h: f64) -> CsrMatrix {
    let n = r.rows();
    let two = Complex64::new(2.0 / (h * h), 0.0);
    let off = Complex64::new(-1.0 / (h * h), 0.0);
    CsrMatrix::from_triplets(
        n,
        n,
        (0..n)
            .map(|i| (i, i, two))
            .chain(r.triplets().map(|(i, j, v)| (i, j, off * v)))
            .chain(r.triplets().map(|(i, j, v)| (j, i, off * v.conj()))),
    )
}

fn sublaplacian_on(grid: QuotientGrid, label: String) -> Result<DiscretizedOperator> {
    let (r, _) = translations(&grid)?;
    let h = grid.spacing[0];
    let matrix = link_square(&r[0], h).add(&link_square(&r[1], h))?;
    Ok(DiscretizedOperator { matrix, grid, continuum_order: 2, label, symmetrization_defect: 0.0 })
}

/// Sub-Laplacian `-(X^2 + Y^2)` on the center-frequency fiber `m`.
pub fn heisenberg_fiber(n: usize, m: i64, period: f64) -> Result<DiscretizedOperator> {
    if n < 8 {
        return Err(Error::Resolution { got: n, min: 8 });
    }
    sublaplacian_on(QuotientGrid::heisenberg(n, period, Center::Fiber { m }), format!("heisenberg_fiber(N={n}, m={m})"))
}

/// One fiber operator per center frequency `m = -m_max..=m_max`, in that order.
pub fn heisenberg_sublaplacian(n: usize, m_max: usize) -> Result<Vec<DiscretizedOperator>> {
    if m_max < 1 {
        return Err(Error::InvalidArgument("m_max must be at least 1".into()));
    }
    let ms: Vec<i64> = (-(m_max as i64)..=m_max as i64).collect();
    par::try_map(&ms, |&m| heisenberg_fiber(n, m, HEISENBERG_PERIOD))
}

/// The sub-Laplacian on a full three-dimensional grid, with `2 m_max + 1`
/// center samples and spectral interpolation for the twisted shifts.
pub fn heisenberg_direct(n: usize, m_max: usize, period: f64) -> Result<DiscretizedOperator> {
    if n < 8 {
        return Err(Error::Resolution { got: n, min: 8 });
    }
    for m in -(m_max as i64)..=m_max as i64 {
        flux_check(m, period)?;
    }
    sublaplacian_on(
        QuotientGrid::heisenberg(n, period, Center::Sampled { m_max }),
        format!("heisenberg_direct(N={n}, m_max={m_max})"),
    )
}
