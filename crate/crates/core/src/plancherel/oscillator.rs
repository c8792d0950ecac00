use serde::{Deserialize, Serialize};

use crate::linalg::{real_symmetric_eigenvalues, sturm_count, tridiagonal_eigenvalues};
use crate::{Error, Result};

/// Barrier-to-quantum ratio above which a double well is treated as two
/// decoupled wells.
const SEPARATED_WELLS: f64 = 20.0;

/// `H = -p d²/dθ² + v4 θ⁴ + v2 θ² + v0` on the line, with `p > 0`, `v4 ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvenOscillator {
    pub kinetic: f64,
    pub v4: f64,
    pub v2: f64,
    pub v0: f64,
}

impl EvenOscillator {
    pub fn new(kinetic: f64, v4: f64, v2: f64, v0: f64) -> Result<Self> {
        let ok = kinetic > 0.0 && v4 >= 0.0 && (v4 > 0.0 || v2 > 0.0) && [kinetic, v4, v2, v0].iter().all(|x| x.is_finite());
        if !ok {
            return Err(Error::InvalidArgument(format!(
                "oscillator needs p > 0 and a confining potential, got p={kinetic}, v4={v4}, v2={v2}"
            )));
        }
        Ok(Self { kinetic, v4, v2, v0 })
    }

    /// `-d² + ω² θ²`, eigenvalues `ω(2k+1)`.
    pub fn harmonic(omega: f64) -> Result<Self> {
        Self::new(1.0, 0.0, omega * omega, 0.0)
    }

    /// `K(b) = -d²/dφ² + (φ² + b)²/4`.
    pub fn reduced(b: f64) -> Self {
        Self { kinetic: 1.0, v4: 0.25, v2: 0.5 * b, v0: 0.25 * b * b }
    }

    pub fn potential(&self, x: f64) -> f64 {
        let x2 = x * x;
        (self.v4 * x2 + self.v2) * x2 + self.v0
    }

    /// Wells at `±θ0` when `v2 < 0`: `(θ0, V(θ0), barrier height)`.
    pub fn wells(&self) -> Option<(f64, f64, f64)> {
        (self.v2 < 0.0 && self.v4 > 0.0).then(|| {
            let x0 = (-self.v2 / (2.0 * self.v4)).sqrt();
            let barrier = self.v2 * self.v2 / (4.0 * self.v4);
            (x0, self.v0 - barrier, barrier)
        })
    }

    pub fn min_potential(&self) -> f64 {
        self.wells().map_or(self.v0, |w| w.1)
    }

    /// Outer turning point `|θ|` where `V = e`.
    pub fn turning_point(&self, e: f64) -> f64 {
        let c = self.v0 - e;
        if self.v4 == 0.0 {
            return (-c / self.v2).max(0.0).sqrt();
        }
        let disc = (self.v2 * self.v2 - 4.0 * self.v4 * c).max(0.0);
        ((-self.v2 + disc.sqrt()) / (2.0 * self.v4)).max(0.0).sqrt()
    }

    /// Phase-space estimate of the number of levels below `e`.
    pub fn wkb_count(&self, e: f64) -> f64 {
        let x = self.turning_point(e);
        let m = 400;
        let h = 2.0 * x / m as f64;
        let s: f64 = (0..m)
            .map(|i| {
                let y = -x + (i as f64 + 0.5) * h;
                ((e - self.potential(y)) / self.kinetic).max(0.0).sqrt()
            })
            .sum();
        s * h / std::f64::consts::PI
    }

    /// Whether levels up to `e` sit deep inside two separated wells.
    fn separated(&self, e: f64) -> Option<(f64, f64)> {
        let (x0, vmin, barrier) = self.wells()?;
        let quantum = (self.kinetic * 4.0 * -self.v2).sqrt();
        (barrier / quantum >= SEPARATED_WELLS && e - vmin < 0.5 * barrier).then_some((x0, vmin))
    }
}

/// How the 1D eigenproblem is discretized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "method")]
pub enum OscillatorDiscretization {
    /// `basis` Hermite functions with a scale fitted to the energy window.
    HermiteBasis { basis: usize },
    /// Centered differences on `[-L, L]` with Dirichlet walls and Richardson
    /// extrapolation over `(h, h/2)`. `half_width` defaults to the turning
    /// point of the energy window; `points` is a floor on the grid size.
    Grid { half_width: Option<f64>, points: usize },
}

impl OscillatorDiscretization {
    pub const MIN_BASIS: usize = 50;
    pub const MIN_POINTS: usize = 200;

    pub fn hermite(basis: usize) -> Self {
        Self::HermiteBasis { basis }
    }

    pub fn grid(points: usize) -> Self {
        Self::Grid { half_width: None, points }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::HermiteBasis { basis } if basis < Self::MIN_BASIS => {
                Err(Error::Resolution { got: basis, min: Self::MIN_BASIS })
            }
            Self::Grid { points, .. } if points < Self::MIN_POINTS => {
                Err(Error::Resolution { got: points, min: Self::MIN_POINTS })
            }
            Self::Grid { half_width: Some(l), .. } if !(l > 0.0 && l.is_finite()) => {
                Err(Error::InvalidArgument(format!("grid half-width {l}")))
            }
            _ => Ok(()),
        }
    }

    /// The same method at twice the resolution.
    pub fn refined(&self) -> Self {
        match *self {
            Self::HermiteBasis { basis } => Self::HermiteBasis { basis: 2 * basis },
            Self::Grid { half_width, points } => Self::Grid { half_width, points: 2 * points },
        }
    }
}

/// Levels of an oscillator below a cutoff, with multiplicity.
#[derive(Debug, Clone, PartialEq)]
pub struct Levels {
    pub values: Vec<f64>,
    pub cutoff: f64,
    /// Per-level absolute error estimates; empty when the method has none.
    pub errors: Vec<f64>,
}

/// Columns of `X^k`, `X = (a + a†)/√2`, restricted to the first `n` functions,
/// as dense row-major `n × n` matrices for `k = 2, 3, 4`.
fn position_powers(n: usize) -> [Vec<f64>; 3] {
    let ext = n + 4;
    let off: Vec<f64> = (0..ext).map(|i| ((i + 1) as f64 / 2.0).sqrt()).collect();
    let apply = |v: &[f64]| -> Vec<f64> {
        let mut w = vec![0.0; ext];
        for i in 0..ext {
            if i + 1 < ext {
                w[i] += off[i] * v[i + 1];
                w[i + 1] += off[i] * v[i];
            }
        }
        w
    };
    let mut out = [vec![0.0; n * n], vec![0.0; n * n], vec![0.0; n * n]];
    for j in 0..n {
        let mut v = vec![0.0; ext];
        v[j] = 1.0;
        v = apply(&v);
        for m in out.iter_mut() {
            v = apply(&v);
            for i in j.saturating_sub(4)..(j + 5).min(n) {
                m[i * n + j] = v[i];
            }
        }
    }
    out
}

/// One-well basis size and scale, when the wells are separated and a basis
/// confined to one well can still resolve the levels.
fn one_well_plan(osc: &EvenOscillator, cutoff: f64, basis: usize, k_e: f64) -> Option<(f64, f64, f64, usize)> {
    let (x0, vmin) = osc.separated(cutoff)?;
    let reach = osc.turning_point(cutoff) - x0;
    let inner = (x0 * x0 - (cutoff - vmin).max(0.0).sqrt() / osc.v4.sqrt()).max(0.0).sqrt();
    let s2 = (x0 - inner).max(reach).max(1e-300) / k_e;
    // the basis must not reach the other well
    let confined = (((0.8 * x0) * (0.8 * x0) / s2 - 1.0) / 2.0).floor();
    let size = basis.min(confined.max(0.0) as usize);
    (size >= OscillatorDiscretization::MIN_BASIS).then_some((x0, vmin, s2, size))
}

fn hermite_levels(osc: &EvenOscillator, cutoff: f64, basis: usize) -> Result<Vec<f64>> {
    let p = osc.kinetic;
    let k_e = ((cutoff - osc.min_potential()).max(0.0) / p).sqrt().max(1e-300);
    let (entries, size, blocks, doubled): (Vec<f64>, usize, Vec<Vec<usize>>, bool) =
        match one_well_plan(osc, cutoff, basis, k_e) {
            Some((x0, vmin, s2, size)) => {
                // shifted to one well: V = v4 (4 x0² δ² + 4 x0 δ³ + δ⁴) + V(x0)
                let [x2, x3, x4] = position_powers(size);
                let s = s2.sqrt();
                let h: Vec<f64> = (0..size * size)
                    .map(|idx| {
                        let (i, j) = (idx / size, idx % size);
                        let diag = if i == j { (2 * i + 1) as f64 } else { 0.0 };
                        p / s2 * (diag - x2[idx])
                            + osc.v4 * (4.0 * x0 * x0 * s2 * x2[idx] + 4.0 * x0 * s2 * s * x3[idx] + s2 * s2 * x4[idx])
                            + if i == j { vmin } else { 0.0 }
                    })
                    .collect();
                (h, size, vec![(0..size).collect()], true)
            }
            None => {
                let [x2, _, x4] = position_powers(basis);
                let s2 = osc.turning_point(cutoff).max(1e-300) / k_e;
                let h: Vec<f64> = (0..basis * basis)
                    .map(|idx| {
                        let (i, j) = (idx / basis, idx % basis);
                        let diag = if i == j { (2 * i + 1) as f64 } else { 0.0 };
                        p / s2 * (diag - x2[idx])
                            + osc.v4 * s2 * s2 * x4[idx]
                            + osc.v2 * s2 * x2[idx]
                            + if i == j { osc.v0 } else { 0.0 }
                    })
                    .collect();
                let even = (0..basis).step_by(2).collect();
                let odd = (1..basis).step_by(2).collect();
                (h, basis, vec![even, odd], false)
            }
        };
    let mut levels = Vec::new();
    for block in blocks {
        let m = block.len();
        let sub: Vec<f64> = (0..m * m).map(|k| entries[block[k / m] * size + block[k % m]]).collect();
        let ev = real_symmetric_eigenvalues(m, &sub);
        let usable = ev.iter().take_while(|&&e| e <= cutoff).count();
        if usable > m / 2 {
            return Err(Error::NotConverged { converged: m / 2, requested: usable });
        }
        levels.extend_from_slice(&ev[..usable]);
    }
    if doubled {
        levels = levels.iter().flat_map(|&e| [e, e]).collect();
    }
    levels.sort_by(f64::total_cmp);
    Ok(levels)
}

fn grid_levels_at(osc: &EvenOscillator, cutoff: f64, l: f64, n: usize) -> Vec<f64> {
    let h = 2.0 * l / (n + 1) as f64;
    let c = osc.kinetic / (h * h);
    let d: Vec<f64> = (1..=n).map(|i| 2.0 * c + osc.potential(-l + i as f64 * h)).collect();
    let e = vec![-c; n - 1];
    let count = sturm_count(&d, &e, cutoff);
    tridiagonal_eigenvalues(&d, &e, count)
}

fn grid_levels(osc: &EvenOscillator, cutoff: f64, half_width: Option<f64>, points: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let l = half_width.unwrap_or_else(|| 1.05 * osc.turning_point(cutoff + 10.0 * (cutoff - osc.min_potential()).abs().max(1.0)));
    if osc.potential(l) < cutoff {
        return Err(Error::InvalidArgument(format!("grid half-width {l} inside the classically allowed region")));
    }
    let k_e = ((cutoff - osc.min_potential()).max(0.0) / osc.kinetic).sqrt();
    let n = points.max((2.0 * l * k_e / 0.05).ceil() as usize);
    let coarse = grid_levels_at(osc, cutoff, l, n);
    let fine = grid_levels_at(osc, cutoff, l, 2 * n + 1);
    let count = coarse.len().min(fine.len());
    let values: Vec<f64> = (0..count).map(|k| (4.0 * fine[k] - coarse[k]) / 3.0).collect();
    let errors = (0..count).map(|k| (values[k] - fine[k]).abs()).collect();
    Ok((values, errors))
}

/// All levels not above `cutoff`.
pub fn levels(osc: &EvenOscillator, cutoff: f64, disc: &OscillatorDiscretization) -> Result<Levels> {
    disc.validate()?;
    match *disc {
        OscillatorDiscretization::HermiteBasis { basis } => {
            let values = hermite_levels(osc, cutoff, basis)?;
            Ok(Levels { values, cutoff, errors: Vec::new() })
        }
        OscillatorDiscretization::Grid { half_width, points } => {
            let (values, errors) = grid_levels(osc, cutoff, half_width, points)?;
            Ok(Levels { values, cutoff, errors })
        }
    }
}

/// The lowest `count` levels, widening the window until enough are found.
pub fn lowest_levels(osc: &EvenOscillator, count: usize, disc: &OscillatorDiscretization) -> Result<Vec<f64>> {
    let vmin = osc.min_potential();
    let mut window = 10.0 * (osc.kinetic * osc.v2.abs().max(osc.v4.cbrt())).sqrt().max(1.0);
    for _ in 0..60 {
        let lv = levels(osc, vmin + window, disc)?;
        if lv.values.len() > count {
            return Ok(lv.values[..count].to_vec());
        }
        window *= 1.5;
    }
    Err(Error::NotConverged { converged: 0, requested: count })
}
