//! Graded nilpotent Lie algebras and their simply connected groups.
//!
//! Group elements are stored in exponential coordinates of the first kind, so
//! the dilations are diagonal and the inverse of `g` is `-g`. The group law is
//! the Baker–Campbell–Hausdorff series, which terminates after the triple
//! brackets for step at most three.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest step for which [`GradedNilpotentLieAlgebra::bch_multiply`] is exact.
pub const MAX_EXACT_STEP: usize = 3;

const STRUCTURE_TOL: f64 = 1e-12;

/// A finite-dimensional Lie algebra with a grading in negative degrees.
///
/// Basis vector `i` has degree `degrees[i] = -p` with `p >= 1`; the bracket is
/// `[e_i, e_j] = sum_k c[i][j][k] e_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradedNilpotentLieAlgebra {
    name: String,
    degrees: Vec<i32>,
    constants: Vec<f64>,
}

/// One failed structural check.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// A basis vector with a degree that is not a negative integer.
    Degree { index: usize, degree: i32 },
    Antisymmetry { i: usize, j: usize, k: usize, cijk: f64, cjik: f64 },
    Jacobi { i: usize, j: usize, k: usize, residual: f64 },
    Grading { i: usize, j: usize, k: usize, value: f64 },
}

/// Exponential coordinates of a group element.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupElement {
    pub coords: Vec<f64>,
}

/// The dilation `delta_lambda`, multiplying degree `-p` coordinates by `lambda^p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dilation(f64);

impl Dilation {
    pub fn new(lambda: f64) -> Result<Self> {
        if lambda == 0.0 || !lambda.is_finite() {
            return Err(Error::InvalidArgument(format!("dilation factor must be finite and nonzero, got {lambda}")));
        }
        Ok(Self(lambda))
    }

    pub fn lambda(self) -> f64 {
        self.0
    }
}

impl GroupElement {
    pub fn new(coords: Vec<f64>) -> Self {
        Self { coords }
    }

    pub fn identity(dim: usize) -> Self {
        Self { coords: vec![0.0; dim] }
    }

    /// Inverse in exponential coordinates of the first kind.
    pub fn inverse(&self) -> Self {
        Self { coords: self.coords.iter().map(|x| -x).collect() }
    }
}

/// JSON form: `{"degrees": [...], "brackets": [[i, j, [[k, c], ...]], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraDocument {
    pub degrees: Vec<i32>,
    #[serde(default)]
    pub brackets: Vec<(usize, usize, Vec<(usize, f64)>)>,
}

impl GradedNilpotentLieAlgebra {
    /// Builds and validates an algebra from its nonzero brackets `[e_i, e_j]`
    /// with `i < j` or `i > j`; the antisymmetric partner is filled in.
    pub fn new(name: impl Into<String>, degrees: Vec<i32>, brackets: &[(usize, usize, Vec<(usize, f64)>)]) -> Result<Self> {
        let dim = degrees.len();
        let mut constants = vec![0.0; dim * dim * dim];
        for (i, j, terms) in brackets {
            let (i, j) = (*i, *j);
            if i >= dim || j >= dim {
                return Err(Error::InvalidAlgebra(format!("bracket index ({i}, {j}) out of range for dimension {dim}")));
            }
            for &(k, c) in terms {
                if k >= dim {
                    return Err(Error::InvalidAlgebra(format!("bracket target {k} out of range for dimension {dim}")));
                }
                constants[(i * dim + j) * dim + k] += c;
                constants[(j * dim + i) * dim + k] -= c;
            }
        }
        let alg = Self { name: name.into(), degrees, constants };
        alg.check()?;
        Ok(alg)
    }

    /// Wraps dense structure constants without validating them; call
    /// [`validate`](Self::validate) to inspect the result.
    pub fn from_raw(name: impl Into<String>, degrees: Vec<i32>, constants: Vec<f64>) -> Result<Self> {
        let dim = degrees.len();
        if constants.len() != dim * dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim * dim, got: constants.len() });
        }
        Ok(Self { name: name.into(), degrees, constants })
    }

    pub fn from_document(name: impl Into<String>, doc: &AlgebraDocument) -> Result<Self> {
        Self::new(name, doc.degrees.clone(), &doc.brackets)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: AlgebraDocument = serde_json::from_str(text)?;
        Self::from_document("custom", &doc)
    }

    pub fn to_document(&self) -> AlgebraDocument {
        let dim = self.dim();
        let mut brackets = Vec::new();
        for i in 0..dim {
            for j in (i + 1)..dim {
                let terms: Vec<(usize, f64)> =
                    (0..dim).map(|k| (k, self.c(i, j, k))).filter(|&(_, c)| c != 0.0).collect();
                if !terms.is_empty() {
                    brackets.push((i, j, terms));
                }
            }
        }
        AlgebraDocument { degrees: self.degrees.clone(), brackets }
    }

    /// The abelian algebra `R^d`, all degrees `-1`.
    pub fn abelian(d: usize) -> Self {
        Self::new(format!("abelian:{d}"), vec![-1; d], &[]).expect("abelian algebra is valid")
    }

    /// The Heisenberg algebra of dimension `2k + 1` with `[x_i, y_i] = z`.
    ///
    /// Basis order: `x_1, y_1, ..., x_k, y_k, z`.
    pub fn heisenberg(k: usize) -> Self {
        let dim = 2 * k + 1;
        let mut degrees = vec![-1; dim];
        degrees[dim - 1] = -2;
        let brackets: Vec<_> = (0..k).map(|i| (2 * i, 2 * i + 1, vec![(dim - 1, 1.0)])).collect();
        Self::new(format!("heisenberg:{k}"), degrees, &brackets).expect("heisenberg algebra is valid")
    }

    /// The free step-three algebra on two generators, growth vector (2,3,5):
    /// `[e0, e1] = e2`, `[e0, e2] = e3`, `[e1, e2] = e4`.
    pub fn carnot_235() -> Self {
        Self::new(
            "carnot235",
            vec![-1, -1, -2, -3, -3],
            &[(0, 1, vec![(2, 1.0)]), (0, 2, vec![(3, 1.0)]), (1, 2, vec![(4, 1.0)])],
        )
        .expect("(2,3,5) algebra is valid")
    }

    /// Resolves `"abelian:d"`, `"heisenberg:k"` or `"carnot235"`.
    pub fn builtin(name: &str) -> Result<Self> {
        let parse = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::Parse(format!("bad size in algebra name {name:?}")))
        };
        match name.split_once(':') {
            Some(("abelian", d)) => {
                let d = parse(d)?;
                if d == 0 {
                    return Err(Error::InvalidAlgebra("abelian algebra needs d >= 1".into()));
                }
                Ok(Self::abelian(d))
            }
            Some(("heisenberg", k)) => {
                let k = parse(k)?;
                if k == 0 {
                    return Err(Error::InvalidAlgebra("heisenberg algebra needs k >= 1".into()));
                }
                Ok(Self::heisenberg(k))
            }
            None if name == "carnot235" => Ok(Self::carnot_235()),
            _ => Err(Error::InvalidAlgebra(format!("unknown built-in algebra {name:?}"))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.degrees.len()
    }

    pub fn degrees(&self) -> &[i32] {
        &self.degrees
    }

    /// Heisenberg weight `|degree|` of basis vector `i`.
    pub fn weight(&self, i: usize) -> usize {
        self.degrees[i].unsigned_abs() as usize
    }

    /// Largest weight among the basis vectors.
    pub fn step(&self) -> usize {
        (0..self.dim()).map(|i| self.weight(i)).max().unwrap_or(0)
    }

    /// Indices of the degree `-1` basis vectors.
    pub fn generators(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&i| self.degrees[i] == -1).collect()
    }

    #[inline]
    pub fn c(&self, i: usize, j: usize, k: usize) -> f64 {
        let d = self.dim();
        self.constants[(i * d + j) * d + k]
    }

    /// Homogeneous dimension: the sum of the weights of all basis vectors.
    pub fn homogeneous_dimension(&self) -> usize {
        (0..self.dim()).map(|i| self.weight(i)).sum()
    }

    /// Bracket of two algebra elements given in basis coordinates.
    pub fn bracket(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let mut out = vec![0.0; d];
        for i in 0..d {
            if x[i] == 0.0 {
                continue;
            }
            for j in 0..d {
                let xy = x[i] * y[j];
                if xy == 0.0 {
                    continue;
                }
                let row = &self.constants[(i * d + j) * d..(i * d + j + 1) * d];
                for (o, c) in out.iter_mut().zip(row) {
                    *o += xy * c;
                }
            }
        }
        out
    }

    /// Lists every violated structural invariant; an empty list means valid.
    pub fn validate(&self) -> Vec<Violation> {
        let d = self.dim();
        let mut out = Vec::new();
        for (index, &degree) in self.degrees.iter().enumerate() {
            if degree >= 0 {
                out.push(Violation::Degree { index, degree });
            }
        }
        let scale = self.constants.iter().fold(1.0_f64, |m, c| m.max(c.abs()));
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    let (a, b) = (self.c(i, j, k), self.c(j, i, k));
                    if i <= j && (a + b).abs() > STRUCTURE_TOL * scale {
                        out.push(Violation::Antisymmetry { i, j, k, cijk: a, cjik: b });
                    }
                    if a != 0.0 && self.degrees[k] != self.degrees[i] + self.degrees[j] {
                        out.push(Violation::Grading { i, j, k, value: a });
                    }
                }
            }
        }
        // [e_i,[e_j,e_k]] + [e_j,[e_k,e_i]] + [e_k,[e_i,e_j]] = 0
        for i in 0..d {
            for j in (i + 1)..d {
                for k in (j + 1)..d {
                    let mut res = vec![0.0; d];
                    for &(a, b, c) in &[(i, j, k), (j, k, i), (k, i, j)] {
                        for l in 0..d {
                            let bc = self.c(b, c, l);
                            if bc == 0.0 {
                                continue;
                            }
                            for (m, r) in res.iter_mut().enumerate() {
                                *r += bc * self.c(a, l, m);
                            }
                        }
                    }
                    let residual = res.iter().fold(0.0_f64, |m, r| m.max(r.abs()));
                    if residual > STRUCTURE_TOL * scale * scale {
                        out.push(Violation::Jacobi { i, j, k, residual });
                    }
                }
            }
        }
        out
    }

    fn check(&self) -> Result<()> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidAlgebra(format!("{} violation(s), first: {:?}", v.len(), v[0])))
        }
    }

    fn check_element(&self, g: &GroupElement) -> Result<()> {
        if g.coords.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: g.coords.len() });
        }
        Ok(())
    }

    /// Group product `g h` via the Baker–Campbell–Hausdorff formula,
    /// truncated after triple brackets (exact for step <= 3).
    pub fn bch_multiply(&self, g: &GroupElement, h: &GroupElement) -> Result<GroupElement> {
        let step = self.step();
        if step > MAX_EXACT_STEP {
            return Err(Error::UnsupportedStep { step });
        }
        self.check_element(g)?;
        self.check_element(h)?;
        let (x, y) = (&g.coords, &h.coords);
        let xy = self.bracket(x, y);
        let x_xy = self.bracket(x, &xy);
        let y_xy = self.bracket(y, &xy);
        // log(e^X e^Y) = X + Y + [X,Y]/2 + ([X,[X,Y]] - [Y,[X,Y]])/12 + (4-fold brackets)
        let coords = (0..self.dim())
            .map(|k| x[k] + y[k] + 0.5 * xy[k] + (x_xy[k] - y_xy[k]) / 12.0)
            .collect();
        Ok(GroupElement { coords })
    }

    /// Applies `delta_lambda` to a group element.
    pub fn dilate(&self, d: Dilation, g: &GroupElement) -> Result<GroupElement> {
        self.check_element(g)?;
        let coords = g
            .coords
            .iter()
            .enumerate()
            .map(|(i, x)| x * d.0.powi(self.weight(i) as i32))
            .collect();
        Ok(GroupElement { coords })
    }

    /// Jacobian determinant of `delta_lambda` in exponential coordinates.
    pub fn dilation_jacobian(&self, d: Dilation) -> f64 {
        (0..self.dim()).map(|i| d.0.powi(self.weight(i) as i32)).product()
    }
}
