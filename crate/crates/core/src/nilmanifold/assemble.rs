use num_complex::Complex64;

use super::heisenberg::{link_square, translations};
use super::{DiscretizedOperator, Manifold, QuotientGrid};
use crate::carnot::GradedNilpotentLieAlgebra;
use crate::linalg::CsrMatrix;
use crate::ops::HomogeneousOperator;
use crate::{Error, Result};

const DEFECT_LIMIT: f64 = 1e-6;

/// Grid realizations of the algebra basis: a translation per horizontal
/// generator and an exact matrix for central directions.
struct Letters {
    spacing: f64,
    translations: Vec<CsrMatrix>,
    center: Option<CsrMatrix>,
}

fn torus_translations(grid: &QuotientGrid, d: usize) -> Vec<CsrMatrix> {
    let n = grid.resolution;
    let total = grid.points();
    (0..d)
        .map(|axis| {
            let s = n.pow(axis as u32);
            CsrMatrix::from_triplets(
                total,
                total,
                (0..total).map(|p| {
                    let c = (p / s) % n;
                    (p, p - c * s + ((c + 1) % n) * s, Complex64::new(1.0, 0.0))
                }),
            )
        })
        .collect()
}

fn letters(alg: &GradedNilpotentLieAlgebra, grid: &QuotientGrid) -> Result<Letters> {
    match grid.manifold {
        Manifold::Torus { d } => {
            if alg.dim() != d || alg.degrees().iter().any(|&g| g != -1) || !alg.to_document().brackets.is_empty() {
                return Err(Error::InvalidArgument(format!(
                    "algebra {} does not model the {d}-torus",
                    alg.name()
                )));
            }
            Ok(Letters { spacing: grid.spacing[0], translations: torus_translations(grid, d), center: None })
        }
        Manifold::HeisenbergNilmanifold { .. } => {
            let model = GradedNilpotentLieAlgebra::heisenberg(1);
            if alg.degrees() != model.degrees() || alg.to_document().brackets != model.to_document().brackets {
                return Err(Error::InvalidArgument(format!(
                    "algebra {} does not model the Heisenberg nilmanifold",
                    alg.name()
                )));
            }
            let (translations, z) = translations(grid)?;
            Ok(Letters { spacing: grid.spacing[0], translations, center: Some(z) })
        }
    }
}

impl Letters {
    /// Matrix for the run `X_i^k`: `(-F^H F)^{k/2}`, times the centered
    /// difference `(R - R^H) / 2h` when `k` is odd. Central letters are exact.
    fn run(&self, i: usize, k: usize) -> Result<CsrMatrix> {
        if i < self.translations.len() {
            let r = &self.translations[i];
            let dim = r.rows();
            let neg_sq = link_square(r, self.spacing).scale(Complex64::new(-1.0, 0.0));
            let mut out = CsrMatrix::identity(dim);
            for _ in 0..k / 2 {
                out = out.matmul(&neg_sq)?;
            }
            if k % 2 == 1 {
                let c = r.add(&r.adjoint().scale(Complex64::new(-1.0, 0.0)))?.scale(Complex64::new(0.5 / self.spacing, 0.0));
                out = c.matmul(&out)?;
            }
            Ok(out)
        } else if let Some(z) = &self.center {
            let mut out = CsrMatrix::identity(z.rows());
            for _ in 0..k {
                out = out.matmul(z)?;
            }
            Ok(out)
        } else {
            Err(Error::InvalidArgument(format!("basis vector {i} has no grid realization")))
        }
    }

    fn word(&self, word: &[usize], dim: usize) -> Result<CsrMatrix> {
        let mut out = CsrMatrix::identity(dim);
        let mut pos = 0;
        while pos < word.len() {
            let letter = word[pos];
            let len = word[pos..].iter().take_while(|&&l| l == letter).count();
            out = out.matmul(&self.run(letter, len)?)?;
            pos += len;
        }
        Ok(out)
    }
}

/// Assembles `op` on `grid` without symmetrization.
pub fn assemble_raw(op: &HomogeneousOperator, grid: &QuotientGrid) -> Result<CsrMatrix> {
    let lt = letters(op.algebra(), grid)?;
    let dim = grid.points();
    let (rows, cols) = op.shape();
    let mut triplets = Vec::new();
    for term in op.terms() {
        let w = lt.word(&term.word, dim)?;
        for a in 0..rows {
            for b in 0..cols {
                let c = term.coeff * term.block[a * cols + b];
                if c == Complex64::new(0.0, 0.0) {
                    continue;
                }
                triplets.extend(w.triplets().map(|(p, q, v)| (a * dim + p, b * dim + q, c * v)));
            }
        }
    }
    Ok(CsrMatrix::from_triplets(rows * dim, cols * dim, triplets))
}

/// Assembles a formally self-adjoint operator as a Hermitian matrix.
///
/// The Hermitian part `(M + M^H) / 2` is returned; a relative anti-Hermitian
/// defect above `1e-6` is refused as unreliable.
pub fn assemble(op: &HomogeneousOperator, grid: &QuotientGrid) -> Result<DiscretizedOperator> {
    let (rows, cols) = op.shape();
    if rows != cols {
        return Err(Error::ShapeMismatch(format!("a {rows}x{cols} operator cannot be Hermitian")));
    }
    let raw = assemble_raw(op, grid)?;
    let scale = raw.inf_norm();
    let defect = if scale > 0.0 { raw.hermitian_defect() / scale } else { 0.0 };
    if defect > DEFECT_LIMIT {
        return Err(Error::UnreliableAssembly { defect, limit: DEFECT_LIMIT });
    }
    Ok(DiscretizedOperator {
        matrix: raw.hermitian_part(),
        grid: grid.clone(),
        continuum_order: op.heisenberg_order(),
        label: format!("assembled(order={}, terms={})", op.heisenberg_order(), op.terms().len()),
        symmetrization_defect: defect,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nilmanifold::{heisenberg_fiber, torus_laplacian, Center, HEISENBERG_PERIOD};
    use crate::ops::ModelSequence;
    use std::sync::Arc;

    #[test]
    fn torus_sublaplacian_matches_stencil() {
        for d in 1..=3 {
            let alg = Arc::new(GradedNilpotentLieAlgebra::abelian(d));
            let grid = QuotientGrid::torus(d, 6);
            let a = assemble(&HomogeneousOperator::sublaplacian(alg), &grid).unwrap();
            let t = torus_laplacian(d, 6).unwrap();
            assert!(a.matrix.max_abs_diff(&t.matrix) < 1e-12 * t.matrix.max_abs());
        }
    }

    #[test]
    fn identity_block() {
        let alg = Arc::new(GradedNilpotentLieAlgebra::abelian(2));
        let grid = QuotientGrid::torus(2, 5);
        let a = assemble(&HomogeneousOperator::identity(alg, 2), &grid).unwrap();
        assert_eq!(a.matrix, CsrMatrix::identity(50));
    }

    #[test]
    fn heisenberg_fiber_matches_builder() {
        let alg = Arc::new(GradedNilpotentLieAlgebra::heisenberg(1));
        let grid = QuotientGrid::heisenberg(8, HEISENBERG_PERIOD, Center::Fiber { m: 2 });
        let a = assemble(&HomogeneousOperator::sublaplacian(alg), &grid).unwrap();
        let f = heisenberg_fiber(8, 2, HEISENBERG_PERIOD).unwrap();
        assert!(a.matrix.max_abs_diff(&f.matrix) < 1e-12 * f.matrix.max_abs());
    }

    #[test]
    fn rumin_seshadri_is_square_of_sublaplacian() {
        let alg = Arc::new(GradedNilpotentLieAlgebra::heisenberg(1));
        let l = HomogeneousOperator::sublaplacian(alg.clone());
        let seq = ModelSequence::new(vec![l.clone()]).unwrap();
        let delta = seq.rumin_seshadri(0, &[1]).unwrap();
        for center in [Center::Fiber { m: 1 }, Center::Sampled { m_max: 1 }] {
            let grid = QuotientGrid::heisenberg(8, HEISENBERG_PERIOD, center);
            let big = assemble(&delta, &grid).unwrap();
            let small = assemble(&l, &grid).unwrap();
            let sq = small.matrix.matmul(&small.matrix).unwrap();
            assert!(big.matrix.max_abs_diff(&sq) < 1e-10 * sq.max_abs(), "{center:?}");
        }
    }

    #[test]
    fn skew_operator_refused() {
        let alg = Arc::new(GradedNilpotentLieAlgebra::abelian(1));
        let x = HomogeneousOperator::generator(alg.clone(), 0).unwrap();
        let grid = QuotientGrid::torus(1, 8);
        assert!(matches!(assemble(&x, &grid), Err(Error::UnreliableAssembly { .. })));
        let raw = assemble_raw(&x, &grid).unwrap();
        assert!(raw.max_abs_diff(&raw.adjoint().scale(Complex64::new(-1.0, 0.0))) < 1e-12);
        let wrong = Arc::new(GradedNilpotentLieAlgebra::heisenberg(1));
        assert!(assemble(&HomogeneousOperator::sublaplacian(wrong), &grid).is_err());
    }
}
