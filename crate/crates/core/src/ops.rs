//! Left-invariant homogeneous differential operators.
//!
//! An operator is a finite sum `sum_t c_t B_t X_{w_1} ... X_{w_k}` of words in
//! the enveloping algebra, where every word has the same weight (the
//! Heisenberg order) and `B_t` is a constant matrix block. Words are kept as
//! written; no normal ordering is attempted.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::carnot::GradedNilpotentLieAlgebra;
use crate::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// One summand `coeff * block * X_{word[0]} ... X_{word[k-1]}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coeff: Complex64,
    pub word: Vec<usize>,
    /// Row-major block of the operator's shape.
    pub block: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomogeneousOperator {
    alg: Arc<GradedNilpotentLieAlgebra>,
    shape: (usize, usize),
    order: usize,
    terms: Vec<Term>,
}

fn block_mul(a: &[Complex64], b: &[Complex64], n: usize, k: usize, m: usize) -> Vec<Complex64> {
    let mut out = vec![ZERO; n * m];
    for i in 0..n {
        for l in 0..k {
            let x = a[i * k + l];
            if x == ZERO {
                continue;
            }
            for j in 0..m {
                out[i * m + j] += x * b[l * m + j];
            }
        }
    }
    out
}

fn identity_block(n: usize) -> Vec<Complex64> {
    let mut b = vec![ZERO; n * n];
    (0..n).for_each(|i| b[i * n + i] = ONE);
    b
}

impl HomogeneousOperator {
    /// Builds an operator, checking that all words share one weight.
    ///
    /// `order` is only consulted when `terms` is empty.
    pub fn new(alg: Arc<GradedNilpotentLieAlgebra>, shape: (usize, usize), terms: Vec<Term>, order: usize) -> Result<Self> {
        if shape.0 == 0 || shape.1 == 0 {
            return Err(Error::ShapeMismatch(format!("block shape {shape:?} must be positive")));
        }
        let mut weights = Vec::new();
        for t in &terms {
            if let Some(&bad) = t.word.iter().find(|&&i| i >= alg.dim()) {
                return Err(Error::InvalidArgument(format!("word letter {bad} out of range for dimension {}", alg.dim())));
            }
            if t.block.len() != shape.0 * shape.1 {
                return Err(Error::ShapeMismatch(format!(
                    "block with {} entries in a {}x{} operator",
                    t.block.len(),
                    shape.0,
                    shape.1
                )));
            }
            let w: usize = t.word.iter().map(|&i| alg.weight(i)).sum();
            if !weights.contains(&w) {
                weights.push(w);
            }
        }
        if weights.len() > 1 {
            weights.sort_unstable();
            return Err(Error::MixedOrder(weights));
        }
        let order = weights.first().copied().unwrap_or(order);
        Ok(Self { alg, shape, order, terms }.canonical())
    }

    /// Scalar operator from `(coeff, word)` pairs.
    pub fn scalar(alg: Arc<GradedNilpotentLieAlgebra>, terms: &[(Complex64, Vec<usize>)]) -> Result<Self> {
        let terms = terms.iter().map(|(c, w)| Term { coeff: *c, word: w.clone(), block: vec![ONE] }).collect();
        Self::new(alg, (1, 1), terms, 0)
    }

    /// The basis vector field `X_i` acting on scalars.
    pub fn generator(alg: Arc<GradedNilpotentLieAlgebra>, i: usize) -> Result<Self> {
        Self::scalar(alg, &[(ONE, vec![i])])
    }

    /// The identity on `C^size`, of order 0.
    pub fn identity(alg: Arc<GradedNilpotentLieAlgebra>, size: usize) -> Self {
        Self::new(alg, (size, size), vec![Term { coeff: ONE, word: vec![], block: identity_block(size) }], 0)
            .expect("identity is homogeneous")
    }

    /// The sub-Laplacian `-sum X_i^2` over the degree `-1` generators.
    pub fn sublaplacian(alg: Arc<GradedNilpotentLieAlgebra>) -> Self {
        let terms: Vec<_> = alg.generators().into_iter().map(|i| (-ONE, vec![i, i])).collect();
        Self::scalar(alg, &terms).expect("sub-Laplacian is homogeneous")
    }

    /// Resolves `"sublaplacian"` for the given algebra.
    pub fn builtin(name: &str, alg: Arc<GradedNilpotentLieAlgebra>) -> Result<Self> {
        match name {
            "sublaplacian" => Ok(Self::sublaplacian(alg)),
            "heat_extension" => Self::sublaplacian(alg).heat_extension(),
            _ => Err(Error::InvalidArgument(format!("unknown built-in operator {name:?}"))),
        }
    }

    /// The heat operator `d/dt + A` on the product with a time line, where
    /// the time direction is appended as a basis vector of degree `-r`.
    pub fn heat_extension(&self) -> Result<Self> {
        if self.order == 0 {
            return Err(Error::InvalidArgument("heat extension needs positive order".into()));
        }
        if self.shape.0 != self.shape.1 {
            return Err(Error::ShapeMismatch("heat extension needs a square block".into()));
        }
        let doc = self.alg.to_document();
        let mut degrees = doc.degrees.clone();
        degrees.push(-(self.order as i32));
        let ext = Arc::new(GradedNilpotentLieAlgebra::new(
            format!("{}+time", self.alg.name()),
            degrees,
            &doc.brackets,
        )?);
        let mut terms = self.terms.clone();
        terms.push(Term { coeff: ONE, word: vec![self.alg.dim()], block: identity_block(self.shape.0) });
        Self::new(ext, self.shape, terms, self.order)
    }

    pub fn algebra(&self) -> &Arc<GradedNilpotentLieAlgebra> {
        &self.alg
    }

    pub fn shape(&self) -> (usize, usize) {
        self.shape
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// Heisenberg order: the common weight of all words.
    pub fn heisenberg_order(&self) -> usize {
        self.order
    }

    /// Merges equal words, drops zero terms and sorts by word. Scalar
    /// operators keep the coefficient in `coeff`; block operators fold it
    /// into the block.
    fn canonical(mut self) -> Self {
        let scalar = self.shape == (1, 1);
        let mut merged: BTreeMap<(usize, Vec<usize>), Vec<Complex64>> = BTreeMap::new();
        for t in self.terms.drain(..) {
            let entry = merged.entry((t.word.len(), t.word)).or_insert_with(|| vec![ZERO; t.block.len()]);
            entry.iter_mut().zip(&t.block).for_each(|(e, b)| *e += t.coeff * b);
        }
        self.terms = merged
            .into_iter()
            .filter(|(_, b)| b.iter().any(|&x| x != ZERO))
            .map(|((_, word), block)| {
                if scalar {
                    Term { coeff: block[0], word, block: vec![ONE] }
                } else {
                    Term { coeff: ONE, word, block }
                }
            })
            .collect();
        self
    }

    /// The composition `self ∘ a` (apply `a` first).
    pub fn compose(&self, a: &Self) -> Result<Self> {
        if self.alg != a.alg {
            return Err(Error::AlgebraMismatch);
        }
        if self.shape.1 != a.shape.0 {
            return Err(Error::ShapeMismatch(format!(
                "cannot compose {}x{} after {}x{}",
                self.shape.0, self.shape.1, a.shape.0, a.shape.1
            )));
        }
        let (n, k, m) = (self.shape.0, self.shape.1, a.shape.1);
        let mut terms = Vec::with_capacity(self.terms.len() * a.terms.len());
        for tb in &self.terms {
            for ta in &a.terms {
                let mut word = tb.word.clone();
                word.extend_from_slice(&ta.word);
                terms.push(Term { coeff: tb.coeff * ta.coeff, word, block: block_mul(&tb.block, &ta.block, n, k, m) });
            }
        }
        Self::new(self.alg.clone(), (n, m), terms, self.order + a.order)
    }

    /// `self^s`; `s = 0` gives the identity.
    pub fn power(&self, s: usize) -> Result<Self> {
        if self.shape.0 != self.shape.1 {
            return Err(Error::ShapeMismatch("power of a non-square operator".into()));
        }
        let mut out = Self::identity(self.alg.clone(), self.shape.0);
        for _ in 0..s {
            out = self.compose(&out)?;
        }
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.alg != other.alg {
            return Err(Error::AlgebraMismatch);
        }
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch(format!("cannot add {:?} and {:?}", self.shape, other.shape)));
        }
        if !self.terms.is_empty() && !other.terms.is_empty() && self.order != other.order {
            return Err(Error::MixedOrder(vec![self.order.min(other.order), self.order.max(other.order)]));
        }
        let terms = self.terms.iter().chain(&other.terms).cloned().collect();
        Self::new(self.alg.clone(), self.shape, terms, self.order.max(other.order))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let terms = self.terms.iter().map(|t| Term { coeff: c * t.coeff, ..t.clone() }).collect();
        Self::new(self.alg.clone(), self.shape, terms, self.order).expect("scaling keeps homogeneity")
    }

    /// Formal adjoint for the invariant density: words reversed, each letter
    /// negated, blocks conjugate-transposed.
    pub fn formal_adjoint(&self) -> Self {
        let (r, c) = self.shape;
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let sign = if t.word.len() % 2 == 0 { 1.0 } else { -1.0 };
                let mut block = vec![ZERO; r * c];
                for i in 0..r {
                    for j in 0..c {
                        block[j * r + i] = t.block[i * c + j].conj();
                    }
                }
                Term { coeff: sign * t.coeff.conj(), word: t.word.iter().rev().copied().collect(), block }
            })
            .collect();
        Self::new(self.alg.clone(), (c, r), terms, self.order).expect("adjoint keeps homogeneity")
    }

    /// Largest coefficient difference against `other` after canonical merging.
    pub fn distance(&self, other: &Self) -> f64 {
        if self.alg != other.alg || self.shape != other.shape {
            return f64::INFINITY;
        }
        let neg = other.scale(-ONE);
        let terms = self.terms.iter().chain(&neg.terms).cloned().collect();
        match Self::new(self.alg.clone(), self.shape, terms, self.order) {
            Ok(d) => d.terms.iter().flat_map(|t| t.block.iter().map(move |b| (t.coeff * b).norm())).fold(0.0, f64::max),
            Err(_) => f64::INFINITY,
        }
    }

    /// Whether the operator equals its formal adjoint up to `tol`.
    pub fn is_formally_self_adjoint(&self, tol: f64) -> bool {
        self.distance(&self.formal_adjoint()) <= tol
    }

    pub fn to_document(&self) -> OperatorDocument {
        let (r, c) = self.shape;
        OperatorDocument {
            algebra: Some(self.alg.name().to_string()),
            terms: self
                .terms
                .iter()
                .map(|t| TermDocument {
                    coeff: [t.coeff.re, t.coeff.im],
                    word: t.word.clone(),
                    block: Some(
                        (0..r).map(|i| (0..c).map(|j| Entry::Complex([t.block[i * c + j].re, t.block[i * c + j].im])).collect()).collect(),
                    ),
                })
                .collect(),
        }
    }

    /// Parses the JSON operator format. The algebra is taken from `alg`, or
    /// from the document's `"algebra"` built-in name when `alg` is `None`.
    pub fn from_json(text: &str, alg: Option<Arc<GradedNilpotentLieAlgebra>>) -> Result<Self> {
        let doc: OperatorDocument = serde_json::from_str(text)?;
        let alg = match (alg, &doc.algebra) {
            (Some(a), _) => a,
            (None, Some(name)) => Arc::new(GradedNilpotentLieAlgebra::builtin(name)?),
            (None, None) => return Err(Error::Parse("operator document names no algebra".into())),
        };
        doc.build(alg)
    }
}

/// A block entry: a real number or a `[re, im]` pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

impl Entry {
    fn value(&self) -> Complex64 {
        match *self {
            Entry::Real(x) => Complex64::new(x, 0.0),
            Entry::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermDocument {
    pub coeff: [f64; 2],
    pub word: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block: Option<Vec<Vec<Entry>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub algebra: Option<String>,
    pub terms: Vec<TermDocument>,
}

impl OperatorDocument {
    pub fn build(&self, alg: Arc<GradedNilpotentLieAlgebra>) -> Result<HomogeneousOperator> {
        let mut shape = None;
        let mut terms = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            let (s, block) = match &t.block {
                None => ((1, 1), vec![ONE]),
                Some(rows) => {
                    let c = rows.first().map_or(0, Vec::len);
                    if rows.iter().any(|r| r.len() != c) {
                        return Err(Error::ShapeMismatch("ragged block".into()));
                    }
                    ((rows.len(), c), rows.iter().flatten().map(Entry::value).collect())
                }
            };
            if *shape.get_or_insert(s) != s {
                return Err(Error::ShapeMismatch(format!("terms with block shapes {:?} and {s:?}", shape.unwrap())));
            }
            terms.push(Term { coeff: Complex64::new(t.coeff[0], t.coeff[1]), word: t.word.clone(), block });
        }
        HomogeneousOperator::new(alg, shape.unwrap_or((1, 1)), terms, 0)
    }
}

/// A chain `A_0, A_1, ...` of homogeneous operators with `A_{i+1} ∘ A_i` defined.
#[derive(Debug, Clone)]
pub struct ModelSequence {
    alg: Arc<GradedNilpotentLieAlgebra>,
    operators: Vec<HomogeneousOperator>,
}

impl ModelSequence {
    pub fn new(operators: Vec<HomogeneousOperator>) -> Result<Self> {
        let first = operators.first().ok_or_else(|| Error::InvalidArgument("empty sequence".into()))?;
        let alg = first.alg.clone();
        for (i, op) in operators.iter().enumerate() {
            if op.alg != alg {
                return Err(Error::AlgebraMismatch);
            }
            if op.order == 0 {
                return Err(Error::InvalidArgument(format!("operator {i} has order 0")));
            }
            if i > 0 && operators[i - 1].shape.0 != op.shape.1 {
                return Err(Error::ShapeMismatch(format!(
                    "operator {} has {} output rows but operator {i} takes {} inputs",
                    i - 1,
                    operators[i - 1].shape.0,
                    op.shape.1
                )));
            }
        }
        Ok(Self { alg, operators })
    }

    pub fn algebra(&self) -> &Arc<GradedNilpotentLieAlgebra> {
        &self.alg
    }

    pub fn operators(&self) -> &[HomogeneousOperator] {
        &self.operators
    }

    pub fn orders(&self) -> Vec<usize> {
        self.operators.iter().map(|a| a.order).collect()
    }

    /// Smallest exponents with `r_i s_i` constant along the whole sequence.
    pub fn minimal_exponents(&self) -> Vec<usize> {
        fn gcd(a: usize, b: usize) -> usize {
            if b == 0 {
                a
            } else {
                gcd(b, a % b)
            }
        }
        let orders = self.orders();
        let kappa = orders.iter().fold(1, |l, &r| l / gcd(l, r) * r);
        orders.iter().map(|r| kappa / r).collect()
    }

    /// `Delta_i = (A_{i-1} A_{i-1}^*)^{s_{i-1}} + (A_i^* A_i)^{s_i}` acting on the
    /// `i`-th bundle, `0 <= i <= len`; missing summands at the ends are dropped.
    pub fn rumin_seshadri(&self, i: usize, s: &[usize]) -> Result<HomogeneousOperator> {
        let len = self.operators.len();
        if i > len {
            return Err(Error::InvalidArgument(format!("index {i} outside 0..={len}")));
        }
        if s.len() != len {
            return Err(Error::DimensionMismatch { expected: len, got: s.len() });
        }
        if s.iter().any(|&x| x == 0) {
            return Err(Error::InvalidArgument("exponents must be positive".into()));
        }
        let orders = self.orders();
        if i > 0 && i < len && orders[i - 1] * s[i - 1] != orders[i] * s[i] {
            return Err(Error::ExponentCondition { pairs: vec![(orders[i - 1], s[i - 1]), (orders[i], s[i])] });
        }
        let mut out: Option<HomogeneousOperator> = None;
        if i > 0 {
            let a = &self.operators[i - 1];
            out = Some(a.compose(&a.formal_adjoint())?.power(s[i - 1])?);
        }
        if i < len {
            let a = &self.operators[i];
            let t = a.formal_adjoint().compose(a)?.power(s[i])?;
            out = Some(match out {
                Some(o) => o.add(&t)?,
                None => t,
            });
        }
        Ok(out.expect("at least one summand"))
    }
}
