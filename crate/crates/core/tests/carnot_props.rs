use hypospec::carnot::{Dilation, GradedNilpotentLieAlgebra as Alg, GroupElement};
use hypospec::linalg::least_squares;
use proptest::prelude::*;

const TOL: f64 = 1e-12;

fn algebras() -> Vec<Alg> {
    vec![Alg::abelian(3), Alg::heisenberg(1), Alg::heisenberg(2), Alg::carnot_235()]
}

fn close(a: &GroupElement, b: &GroupElement) -> f64 {
    a.coords.iter().zip(&b.coords).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn element(alg: &Alg, raw: &[f64]) -> GroupElement {
    GroupElement::new(raw[..alg.dim()].to_vec())
}

fn coords() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, 5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn bch_is_associative(a in coords(), b in coords(), c in coords(), which in 0usize..4) {
        let alg = &algebras()[which];
        let (g, h, k) = (element(alg, &a), element(alg, &b), element(alg, &c));
        let left = alg.bch_multiply(&alg.bch_multiply(&g, &h).unwrap(), &k).unwrap();
        let right = alg.bch_multiply(&g, &alg.bch_multiply(&h, &k).unwrap()).unwrap();
        prop_assert!(close(&left, &right) <= TOL, "{:?} vs {:?}", left, right);
    }

    #[test]
    fn inverse_and_identity(a in coords(), which in 0usize..4) {
        let alg = &algebras()[which];
        let g = element(alg, &a);
        let e = GroupElement::identity(alg.dim());
        prop_assert!(close(&alg.bch_multiply(&g, &g.inverse()).unwrap(), &e) <= TOL);
        prop_assert!(close(&alg.bch_multiply(&e, &g).unwrap(), &g) <= TOL);
    }

    #[test]
    fn dilation_is_an_automorphism(a in coords(), b in coords(), lambda in 0.05..3.0f64, flip in any::<bool>(), which in 0usize..4) {
        let alg = &algebras()[which];
        let d = Dilation::new(if flip { -lambda } else { lambda }).unwrap();
        let (g, h) = (element(alg, &a), element(alg, &b));
        let left = alg.dilate(d, &alg.bch_multiply(&g, &h).unwrap()).unwrap();
        let right = alg.bch_multiply(&alg.dilate(d, &g).unwrap(), &alg.dilate(d, &h).unwrap()).unwrap();
        let scale = 1.0 + left.coords.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        prop_assert!(close(&left, &right) <= TOL * scale);
    }

    #[test]
    fn dilations_form_a_group(a in coords(), l1 in 0.05..3.0f64, l2 in 0.05..3.0f64, which in 0usize..4) {
        let alg = &algebras()[which];
        let g = element(alg, &a);
        let (d1, d2) = (Dilation::new(l1).unwrap(), Dilation::new(l2).unwrap());
        let twice = alg.dilate(d1, &alg.dilate(d2, &g).unwrap()).unwrap();
        let once = alg.dilate(Dilation::new(l1 * l2).unwrap(), &g).unwrap();
        let scale = 1.0 + once.coords.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        prop_assert!(close(&twice, &once) <= TOL * scale);
        prop_assert!(close(&alg.dilate(Dilation::new(1.0).unwrap(), &g).unwrap(), &g) == 0.0);
    }

    #[test]
    fn jacobian_is_lambda_to_the_homogeneous_dimension(lambda in 0.05..3.0f64, which in 0usize..4) {
        let alg = &algebras()[which];
        let d = Dilation::new(lambda).unwrap();
        // determinant of the matrix whose columns are the dilated basis vectors
        let n = alg.dim();
        let mut m: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let mut e = vec![0.0; n];
                e[i] = 1.0;
                alg.dilate(d, &GroupElement::new(e)).unwrap().coords
            })
            .collect();
        let det = determinant(&mut m);
        let expected = lambda.powi(alg.homogeneous_dimension() as i32);
        prop_assert!((alg.dilation_jacobian(d) - expected).abs() <= TOL * expected);
        prop_assert!((det - expected).abs() <= TOL * expected);
    }

    #[test]
    fn graded_basis_changes_stay_valid(p in prop::collection::vec(-2.0..2.0f64, 9)) {
        let alg = Alg::carnot_235();
        // block-diagonal change of basis on degrees -1, -2, -3
        let a = [[1.0 + p[0].abs(), p[1]], [p[2], 1.0 + p[3].abs() + p[1].abs() * p[2].abs()]];
        let c = 0.5 + p[4].abs();
        let b = [[1.0 + p[5].abs(), p[6]], [p[7], 1.0 + p[8].abs() + p[6].abs() * p[7].abs()]];
        let mut cols = vec![vec![0.0; 5]; 5];
        for i in 0..2 {
            for j in 0..2 {
                cols[j][i] = a[i][j];
                cols[3 + j][3 + i] = b[i][j];
            }
        }
        cols[2][2] = c;
        let inv2 = |m: [[f64; 2]; 2]| {
            let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            [[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]]
        };
        let (ai, bi) = (inv2(a), inv2(b));
        let to_new = |v: &[f64]| -> Vec<f64> {
            vec![
                ai[0][0] * v[0] + ai[0][1] * v[1],
                ai[1][0] * v[0] + ai[1][1] * v[1],
                v[2] / c,
                bi[0][0] * v[3] + bi[0][1] * v[4],
                bi[1][0] * v[3] + bi[1][1] * v[4],
            ]
        };
        let mut constants = vec![0.0; 125];
        for i in 0..5 {
            for j in 0..5 {
                let br = to_new(&alg.bracket(&cols[i], &cols[j]));
                for k in 0..5 {
                    constants[(i * 5 + j) * 5 + k] = br[k];
                }
            }
        }
        let changed = Alg::from_raw("changed", alg.degrees().to_vec(), constants.clone()).unwrap();
        prop_assert!(changed.validate().is_empty(), "{:?}", changed.validate());

        // breaking antisymmetry or grading is always reported
        let (i, j, k) = ((p[0].abs() * 10.0) as usize % 5, (p[1].abs() * 10.0) as usize % 5, (p[2].abs() * 10.0) as usize % 5);
        let j = if j == i { (i + 1) % 5 } else { j };
        constants[(i * 5 + j) * 5 + k] += 0.5 + p[3].abs();
        let broken = Alg::from_raw("broken", alg.degrees().to_vec(), constants).unwrap();
        prop_assert!(!broken.validate().is_empty());
    }
}

fn determinant(m: &mut [Vec<f64>]) -> f64 {
    let n = m.len();
    let mut det = 1.0;
    for c in 0..n {
        let p = (c..n).max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs())).unwrap();
        if m[p][c] == 0.0 {
            return 0.0;
        }
        if p != c {
            m.swap(p, c);
            det = -det;
        }
        det *= m[c][c];
        for r in (c + 1)..n {
            let f = m[r][c] / m[c][c];
            for k in c..n {
                m[r][k] -= f * m[c][k];
            }
        }
    }
    det
}

type Mat = Vec<Vec<f64>>;

fn zeros(n: usize) -> Mat {
    vec![vec![0.0; n]; n]
}

fn mul(a: &Mat, b: &Mat) -> Mat {
    let n = a.len();
    let mut c = zeros(n);
    for i in 0..n {
        for k in 0..n {
            for j in 0..n {
                c[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    c
}

fn lin(a: &Mat, s: f64, b: &Mat, t: f64) -> Mat {
    a.iter().zip(b).map(|(r, q)| r.iter().zip(q).map(|(x, y)| s * x + t * y).collect()).collect()
}

fn comm(a: &Mat, b: &Mat) -> Mat {
    lin(&mul(a, b), 1.0, &mul(b, a), -1.0)
}

fn identity(n: usize) -> Mat {
    let mut m = zeros(n);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}

/// Exponential of a nilpotent matrix.
fn expm(a: &Mat) -> Mat {
    let n = a.len();
    let (mut out, mut term) = (identity(n), identity(n));
    for k in 1..=n {
        term = mul(&term, a);
        term.iter_mut().flatten().for_each(|x| *x /= k as f64);
        out = lin(&out, 1.0, &term, 1.0);
    }
    out
}

/// Logarithm of a unipotent matrix.
fn logm(m: &Mat) -> Mat {
    let n = m.len();
    let x = lin(m, 1.0, &identity(n), -1.0);
    let (mut out, mut p) = (zeros(n), identity(n));
    for k in 1..=n {
        p = mul(&p, &x);
        let s = if k % 2 == 1 { 1.0 } else { -1.0 } / k as f64;
        out = lin(&out, 1.0, &p, s);
    }
    out
}

fn unit(n: usize, i: usize, j: usize) -> Mat {
    let mut m = zeros(n);
    m[i][j] = 1.0;
    m
}

/// A faithful 8×8 representation of the (2,3,5) algebra: two 4×4 blocks
/// with the generators' roles exchanged.
fn rep_235() -> Vec<Mat> {
    let block = |a: &Mat, b: &Mat| {
        let c = comm(a, b);
        vec![a.clone(), b.clone(), c.clone(), comm(a, &c), comm(b, &c)]
    };
    let a = lin(&unit(4, 0, 1), 1.0, &unit(4, 2, 3), 1.0);
    let b = unit(4, 1, 2);
    let first = block(&a, &b);
    let second = block(&b, &a);
    first
        .iter()
        .zip(&second)
        .map(|(x, y)| {
            let mut m = zeros(8);
            for i in 0..4 {
                for j in 0..4 {
                    m[i][j] = x[i][j];
                    m[4 + i][4 + j] = y[i][j];
                }
            }
            m
        })
        .collect()
}

fn rep_heisenberg() -> Vec<Mat> {
    vec![unit(3, 0, 1), unit(3, 1, 2), unit(3, 0, 2)]
}

fn embed(basis: &[Mat], x: &[f64]) -> Mat {
    let n = basis[0].len();
    basis.iter().zip(x).fold(zeros(n), |acc, (b, c)| lin(&acc, 1.0, b, *c))
}

/// Coordinates of `m` in `basis`, with the least-squares residual.
fn coordinates(basis: &[Mat], m: &Mat) -> (Vec<f64>, f64) {
    let n = m.len();
    let rows: Vec<Vec<f64>> = (0..n * n).map(|k| basis.iter().map(|b| b[k / n][k % n]).collect()).collect();
    let rhs: Vec<f64> = (0..n * n).map(|k| m[k / n][k % n]).collect();
    let ls = least_squares(&rows, &rhs).unwrap();
    let back = embed(basis, &ls.solution);
    let residual = back.iter().flatten().zip(m.iter().flatten()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    (ls.solution, residual)
}

fn matrix_oracle(alg: &Alg, basis: &[Mat], cases: usize) {
    // the representation must respect the brackets and be faithful
    for i in 0..alg.dim() {
        for j in 0..alg.dim() {
            let mut ei = vec![0.0; alg.dim()];
            let mut ej = vec![0.0; alg.dim()];
            ei[i] = 1.0;
            ej[j] = 1.0;
            let lhs = comm(&basis[i], &basis[j]);
            let rhs = embed(basis, &alg.bracket(&ei, &ej));
            let diff = lin(&lhs, 1.0, &rhs, -1.0).iter().flatten().fold(0.0_f64, |m, x| m.max(x.abs()));
            assert!(diff < 1e-15, "bracket ({i},{j}) not represented");
        }
    }
    let rows: Vec<Vec<f64>> = {
        let n = basis[0].len();
        (0..n * n).map(|k| basis.iter().map(|b| b[k / n][k % n]).collect()).collect()
    };
    let sv = least_squares(&rows, &vec![0.0; rows.len()]).unwrap().singular_values;
    assert!(sv.last().unwrap() > &1e-3, "representation is not faithful: {sv:?}");

    let mut state = 0x2545_f491_4f6c_dd1d_u64;
    let mut next = || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    };
    for _ in 0..cases {
        let x: Vec<f64> = (0..alg.dim()).map(|_| next()).collect();
        let y: Vec<f64> = (0..alg.dim()).map(|_| next()).collect();
        let z = alg.bch_multiply(&GroupElement::new(x.clone()), &GroupElement::new(y.clone())).unwrap();
        let prod = mul(&expm(&embed(basis, &x)), &expm(&embed(basis, &y)));
        let (coords, residual) = coordinates(basis, &logm(&prod));
        assert!(residual < 1e-12, "log of the product left the image: {residual}");
        for (a, b) in coords.iter().zip(&z.coords) {
            assert!((a - b).abs() < 1e-12, "{coords:?} vs {:?}", z.coords);
        }
    }
}

#[test]
fn bch_matches_matrix_group_235() {
    matrix_oracle(&Alg::carnot_235(), &rep_235(), 1000);
}

#[test]
fn bch_matches_matrix_group_heisenberg() {
    matrix_oracle(&Alg::heisenberg(1), &rep_heisenberg(), 1000);
}
