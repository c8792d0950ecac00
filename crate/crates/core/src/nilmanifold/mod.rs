//! Finite-difference discretization of left-invariant operators on compact
//! quotients: flat tori and the Heisenberg nilmanifold.
//!
//! Generators are discretized as link (Peierls) differences
//! `F = (R_h - I) / h`, where `R_h` is the right translation by `exp(h X)`
//! restricted to the grid. Squares use the compact form `X^2 -> -F^H F`, so
//! sub-Laplacians are Hermitian, nonnegative and free of spurious zero modes.
//!
//! The Heisenberg nilmanifold is `Γ \ H` with group law
//! `(x, y, z)(x', y', z') = (x + x', y + y', z + z' + (x y' - y x') / 2)` and
//! lattice `Γ = L Z × L Z × Z`, `L = √2` by default. Functions are expanded in
//! the center frequency `m`; fiber `m` carries magnetic Bloch conditions
//! `u(x + L, y) = e^{-iπ m L y} u` and `u(x, y + L) = e^{iπ m L x} u`.

mod assemble;
mod export;
mod heisenberg;

use serde::Serialize;

use crate::linalg::CsrMatrix;

pub use assemble::{assemble, assemble_raw};
pub use export::{read_coordinate, write_coordinate, write_sidecar};
pub use heisenberg::{heisenberg_direct, heisenberg_fiber, heisenberg_sublaplacian, HEISENBERG_PERIOD};

/// Fraction of `1 / h^2` below which discrete eigenvalues are trusted.
pub const TRUST_FACTOR: f64 = 0.1;

/// Smallest admissible points per direction.
pub const MIN_RESOLUTION: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Manifold {
    /// The unit torus `R^d / Z^d`.
    Torus { d: usize },
    /// `Γ \ H` with lattice period `period` in the horizontal directions.
    HeisenbergNilmanifold { period: f64 },
}

/// How the center direction of the nilmanifold is represented.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Center {
    /// A single Fourier mode `e^{2πi m z}`.
    Fiber { m: i64 },
    /// `2 m_max + 1` equispaced samples with spectral interpolation.
    Sampled { m_max: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuotientGrid {
    pub manifold: Manifold,
    /// Points per horizontal coordinate direction.
    pub resolution: usize,
    pub spacing: Vec<f64>,
    /// Cell volume, so that `volume_weight * tr(I) = vol(M)`.
    pub volume_weight: f64,
    pub center: Option<Center>,
}

impl QuotientGrid {
    pub fn torus(d: usize, n: usize) -> Self {
        let h = 1.0 / n as f64;
        Self {
            manifold: Manifold::Torus { d },
            resolution: n,
            spacing: vec![h; d],
            volume_weight: h.powi(d as i32),
            center: None,
        }
    }

    pub fn heisenberg(n: usize, period: f64, center: Center) -> Self {
        let h = period / n as f64;
        let nz = match center {
            Center::Fiber { .. } => 1,
            Center::Sampled { m_max } => 2 * m_max + 1,
        };
        Self {
            manifold: Manifold::HeisenbergNilmanifold { period },
            resolution: n,
            spacing: vec![h, h],
            volume_weight: h * h / nz as f64,
            center: Some(center),
        }
    }

    /// Number of unknowns.
    pub fn points(&self) -> usize {
        let horizontal = self.resolution.pow(self.spacing.len() as u32);
        match self.center {
            Some(Center::Sampled { m_max }) => horizontal * (2 * m_max + 1),
            _ => horizontal,
        }
    }

    /// Volume of the fundamental domain.
    pub fn volume(&self) -> f64 {
        match self.manifold {
            Manifold::Torus { .. } => 1.0,
            Manifold::HeisenbergNilmanifold { period } => period * period,
        }
    }

    /// Eigenvalues above this value are dominated by lattice dispersion.
    pub fn trust_cutoff(&self) -> f64 {
        let h = self.spacing.iter().copied().fold(0.0, f64::max);
        TRUST_FACTOR / (h * h)
    }
}

/// A Hermitian matrix standing for an operator on a compact quotient.
#[derive(Debug, Clone)]
pub struct DiscretizedOperator {
    pub matrix: CsrMatrix,
    pub grid: QuotientGrid,
    pub continuum_order: usize,
    pub label: String,
    /// Relative size of the anti-Hermitian part removed during assembly.
    pub symmetrization_defect: f64,
}

/// Outcome of [`DiscretizedOperator::check`].
#[derive(Debug, Clone, Serialize)]
pub struct InvariantReport {
    pub hermitian_defect: f64,
    pub smallest_eigenvalue: Option<f64>,
    pub constant_residual: f64,
    pub norm_bound: f64,
}

impl InvariantReport {
    pub fn is_hermitian(&self) -> bool {
        self.hermitian_defect <= 1e-12 * self.norm_bound.max(1.0)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.smallest_eigenvalue.map_or(true, |e| e >= -1e-9 * self.norm_bound)
    }

    pub fn annihilates_constants(&self) -> bool {
        self.constant_residual <= 1e-9 * self.norm_bound
    }
}

impl DiscretizedOperator {
    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    /// Hermitian defect, lowest eigenvalue (dense, for dimension up to 4096)
    /// and the residual on the constant vector.
    pub fn check(&self) -> InvariantReport {
        use num_complex::Complex64;
        let norm_bound = self.matrix.inf_norm();
        let ones = vec![Complex64::new(1.0, 0.0); self.dim()];
        let r = self.matrix.matvec(&ones);
        let constant_residual = r.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt() / (self.dim() as f64).sqrt();
        let smallest_eigenvalue = (self.dim() <= crate::spectral::DENSE_LIMIT)
            .then(|| crate::linalg::dense_hermitian_eigenvalues(&self.matrix.to_dense()).first().copied())
            .flatten();
        InvariantReport { hermitian_defect: self.matrix.hermitian_defect(), smallest_eigenvalue, constant_residual, norm_bound }
    }
}

/// The `(2d+1)`-point Laplacian on the unit torus with spacing `1/n`.
pub fn torus_laplacian(d: usize, n: usize) -> crate::Result<DiscretizedOperator> {
    use num_complex::Complex64;
    if !(1..=3).contains(&d) {
        return Err(crate::Error::InvalidArgument(format!("torus dimension {d} not in 1..=3")));
    }
    if n < MIN_RESOLUTION {
        return Err(crate::Error::Resolution { got: n, min: MIN_RESOLUTION });
    }
    let grid = QuotientGrid::torus(d, n);
    let h2 = grid.spacing[0] * grid.spacing[0];
    let total = grid.points();
    let strides: Vec<usize> = (0..d).map(|i| n.pow(i as u32)).collect();
    let mut t = Vec::with_capacity(total * (2 * d + 1));
    for p in 0..total {
        t.push((p, p, Complex64::new(2.0 * d as f64 / h2, 0.0)));
        for &s in &strides {
            let c = (p / s) % n;
            let up = p - c * s + ((c + 1) % n) * s;
            let down = p - c * s + ((c + n - 1) % n) * s;
            t.push((p, up, Complex64::new(-1.0 / h2, 0.0)));
            t.push((p, down, Complex64::new(-1.0 / h2, 0.0)));
        }
    }
    Ok(DiscretizedOperator {
        matrix: CsrMatrix::from_triplets(total, total, t),
        grid,
        continuum_order: 2,
        label: format!("torus_laplacian(d={d}, N={n})"),
        symmetrization_defect: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dense_hermitian_eigenvalues;
    use std::f64::consts::PI;

    #[test]
    fn torus_1d_n4() {
        let op = torus_laplacian(1, 4).unwrap();
        let ev = dense_hermitian_eigenvalues(&op.matrix.to_dense());
        for (x, y) in ev.iter().zip([0.0, 32.0, 32.0, 64.0]) {
            assert!((x - y).abs() < 1e-12, "{ev:?}");
        }
        let rep = op.check();
        assert!(rep.is_hermitian() && rep.is_nonnegative() && rep.annihilates_constants());
        assert!(matches!(torus_laplacian(1, 3), Err(crate::Error::Resolution { got: 3, min: 4 })));
    }

    #[test]
    fn torus_volume_weight() {
        for d in 1..=3 {
            let g = QuotientGrid::torus(d, 6);
            assert!((g.volume_weight * g.points() as f64 - g.volume()).abs() < 1e-12);
        }
        let g = QuotientGrid::heisenberg(8, HEISENBERG_PERIOD, Center::Sampled { m_max: 2 });
        assert!((g.volume_weight * g.points() as f64 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn torus_2d_tenth_eigenvalue() {
        // integer lattice enumeration of 4π²(j² + k²)
        let mut exact: Vec<f64> = Vec::new();
        for j in -10i32..=10 {
            for k in -10i32..=10 {
                exact.push(4.0 * PI * PI * (j * j + k * k) as f64);
            }
        }
        exact.sort_by(f64::total_cmp);
        let op = torus_laplacian(2, 64).unwrap();
        let spec = crate::spectral::eigenvalues(&op, crate::spectral::Count::Smallest(11)).unwrap();
        let got = spec.expanded()[10];
        assert!((got - exact[10]).abs() < 0.02 * exact[10], "{got} vs {}", exact[10]);
    }

    #[test]
    fn second_order_refinement() {
        // discrete 1D eigenvalue for k = 1 is (2 - 2 cos(2π/N)) N²
        let err = |n: usize| {
            let op = torus_laplacian(1, n).unwrap();
            let ev = dense_hermitian_eigenvalues(&op.matrix.to_dense());
            (ev[1] - 4.0 * PI * PI).abs()
        };
        let ratio = err(16) / err(32);
        assert!((3.5..=4.5).contains(&ratio), "{ratio}");
    }
}
