//! Experiment configuration: one JSON document per run, checked against the
//! key set of its subcommand before it is deserialized.

use std::fmt;
use std::path::PathBuf;

use hypospec::plancherel::{OscillatorDiscretization, PlancherelQuadrature};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::ConfigError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subcommand {
    Spectrum,
    Weyl,
    Heat,
    Zeta,
    Ncr,
    Index,
    Alpha235,
    Validate,
}

impl Subcommand {
    pub const ALL: [Subcommand; 8] = [
        Subcommand::Spectrum,
        Subcommand::Weyl,
        Subcommand::Heat,
        Subcommand::Zeta,
        Subcommand::Ncr,
        Subcommand::Index,
        Subcommand::Alpha235,
        Subcommand::Validate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Spectrum => "spectrum",
            Subcommand::Weyl => "weyl",
            Subcommand::Heat => "heat",
            Subcommand::Zeta => "zeta",
            Subcommand::Ncr => "ncr",
            Subcommand::Index => "index",
            Subcommand::Alpha235 => "alpha235",
            Subcommand::Validate => "validate",
        }
    }

    /// Keys accepted by this subcommand besides `tolerances` and `out`.
    pub fn keys(self) -> &'static [&'static str] {
        const SOURCE: &[&str] =
            &["manifold", "resolution", "m_max", "eigen_count", "lambda_max", "spectrum_csv", "homogeneous", "trust_cutoff"];
        const WEYL: &[&str] = &[
            "manifold", "resolution", "m_max", "eigen_count", "lambda_max", "spectrum_csv", "homogeneous", "trust_cutoff",
            "window",
        ];
        const HEAT: &[&str] = &[
            "manifold", "resolution", "m_max", "eigen_count", "lambda_max", "spectrum_csv", "homogeneous", "trust_cutoff",
            "j_max", "samples",
        ];
        const ZETA: &[&str] = &[
            "manifold", "resolution", "m_max", "eigen_count", "lambda_max", "spectrum_csv", "homogeneous", "trust_cutoff",
            "j_max", "samples", "z",
        ];
        const NCR: &[&str] = &[
            "manifold", "resolution", "m_max", "eigen_count", "lambda_max", "spectrum_csv", "homogeneous", "trust_cutoff",
            "j_max", "samples", "power",
        ];
        match self {
            Subcommand::Spectrum => SOURCE,
            Subcommand::Weyl => WEYL,
            Subcommand::Heat => HEAT,
            Subcommand::Zeta => ZETA,
            Subcommand::Ncr => NCR,
            Subcommand::Index => &["matrix", "times"],
            Subcommand::Alpha235 => &["quadrature", "discretization"],
            Subcommand::Validate => &["algebra", "algebra_file"],
        }
    }
}

impl fmt::Display for Subcommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Tolerances for the assertions a run declares.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative, on the Weyl exponent.
    pub exponent: f64,
    /// Relative, on the Weyl constant.
    pub constant: f64,
    /// Bound on `|a_j| / |a_0|` for odd `j`.
    pub parity: f64,
    /// Relative, on `a_0`, zeta residues and `τ`.
    pub residue: f64,
    /// Relative drift of the supertrace.
    pub drift: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { exponent: 0.05, constant: 0.05, parity: 0.05, residue: 0.02, drift: 1e-10 }
    }
}

/// Where a spectrum comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Manifold {
    /// Unit `d`-torus, finite differences or the exact spectrum.
    Torus { d: usize, analytic: bool },
    /// Heisenberg nilmanifold, fibered finite differences or Landau levels.
    Heisenberg { analytic: bool },
}

impl Manifold {
    pub fn parse(name: &str) -> Option<Self> {
        let (base, analytic) = match name.strip_suffix("_analytic") {
            Some(b) => (b, true),
            None => (name, false),
        };
        match base {
            "torus1" => Some(Manifold::Torus { d: 1, analytic }),
            "torus2" => Some(Manifold::Torus { d: 2, analytic }),
            "torus3" => Some(Manifold::Torus { d: 3, analytic }),
            "heisenberg" => Some(Manifold::Heisenberg { analytic }),
            _ => None,
        }
    }

    /// Homogeneous dimension and order of the Laplacian.
    pub fn homogeneous(self) -> (usize, usize) {
        match self {
            Manifold::Torus { d, .. } => (d, 2),
            Manifold::Heisenberg { .. } => (4, 2),
        }
    }

    /// Exact leading heat coefficient.
    pub fn a0(self) -> f64 {
        match self {
            Manifold::Torus { d, .. } => (4.0 * std::f64::consts::PI).powf(-(d as f64) / 2.0),
            Manifold::Heisenberg { .. } => 0.125,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// `torus1..3`, `heisenberg`, each optionally with `_analytic`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manifold: Option<String>,
    /// Grid points per direction.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resolution: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_max: Option<usize>,
    /// Smallest eigenvalues to keep (all when absent).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eigen_count: Option<usize>,
    /// Largest eigenvalue of an analytic spectrum.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_max: Option<f64>,
    /// `eigenvalue,multiplicity` file used instead of a manifold.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectrum_csv: Option<PathBuf>,
    /// `(n, r)` for a spectrum read from file.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub homogeneous: Option<(usize, usize)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trust_cutoff: Option<f64>,
    /// Weyl fit window in `λ`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub j_max: Option<usize>,
    /// Heat-trace samples in the fit window.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    /// Zeta arguments as `[re, im]`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z: Option<Vec<[f64; 2]>>,
    /// Integer power `p` for the `D -> D^p` residue check.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub power: Option<u32>,
    /// CSV of matrix entries, one row per line; complex entries as `a+bi`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrix: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
    /// Built-in algebra name.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub algebra: Option<String>,
    /// Algebra document in JSON.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub algebra_file: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quadrature: Option<PlancherelQuadrature>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub discretization: Option<OscillatorDiscretization>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Checks the key set, deserializes and validates.
    pub fn from_value(sub: Subcommand, value: Value) -> Result<Self, ConfigError> {
        let Value::Object(map) = value else {
            return Err(ConfigError::Schema("configuration must be a JSON object".into()));
        };
        check_keys(sub, &map)?;
        let cfg: ExperimentConfig =
            serde_json::from_value(Value::Object(map)).map_err(|e| ConfigError::Schema(e.to_string()))?;
        cfg.validate(sub)?;
        Ok(cfg)
    }

    pub fn from_json(sub: Subcommand, text: &str) -> Result<Self, ConfigError> {
        let value = serde_json::from_str(text).map_err(|e| ConfigError::Schema(e.to_string()))?;
        Self::from_value(sub, value)
    }

    pub fn validate(&self, sub: Subcommand) -> Result<(), ConfigError> {
        let bad = |msg: String| Err(ConfigError::Schema(msg));
        let t = &self.tolerances;
        for (name, v) in
            [("exponent", t.exponent), ("constant", t.constant), ("parity", t.parity), ("residue", t.residue), ("drift", t.drift)]
        {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("tolerance {name} must be positive, got {v}"));
            }
        }
        match sub {
            Subcommand::Spectrum | Subcommand::Weyl | Subcommand::Heat | Subcommand::Zeta | Subcommand::Ncr => {
                self.manifold()?;
            }
            Subcommand::Index => {
                if self.matrix.is_none() {
                    return bad("index needs a matrix file".into());
                }
            }
            Subcommand::Alpha235 => {
                self.quadrature().validate().map_err(|e| ConfigError::Schema(e.to_string()))?;
                self.discretization().validate().map_err(|e| ConfigError::Schema(e.to_string()))?;
            }
            Subcommand::Validate => {
                if self.algebra.is_some() && self.algebra_file.is_some() {
                    return bad("give either algebra or algebra_file, not both".into());
                }
            }
        }
        if let Some(r) = self.resolution {
            if r < 4 {
                return bad(format!("resolution {r} below 4"));
            }
        }
        if self.m_max == Some(0) {
            return bad("m_max must be at least 1".into());
        }
        if self.eigen_count == Some(0) {
            return bad("eigen_count must be positive".into());
        }
        if let Some(l) = self.lambda_max {
            if !(l.is_finite() && l > 0.0) {
                return bad(format!("lambda_max must be positive, got {l}"));
            }
        }
        if let Some((n, r)) = self.homogeneous {
            if n == 0 || r == 0 {
                return bad("homogeneous dimension and order must be positive".into());
            }
        }
        if let Some(c) = self.trust_cutoff {
            if !(c > 0.0) {
                return bad(format!("trust_cutoff must be positive, got {c}"));
            }
        }
        if let Some((lo, hi)) = self.window {
            if !(lo > 0.0 && hi > lo && hi.is_finite()) {
                return bad(format!("window [{lo}, {hi}] must satisfy 0 < lo < hi"));
            }
        }
        if let Some(j) = self.j_max {
            if j > 12 {
                return bad(format!("j_max {j} above 12"));
            }
        }
        if let Some(s) = self.samples {
            if s < 8 {
                return bad(format!("samples {s} below 8"));
            }
        }
        if let Some(zs) = &self.z {
            if zs.is_empty() || zs.iter().flatten().any(|v| !v.is_finite()) {
                return bad("z must be a nonempty list of finite [re, im] pairs".into());
            }
        }
        if self.power == Some(0) {
            return bad("power must be at least 1".into());
        }
        if let Some(ts) = &self.times {
            if ts.is_empty() || ts.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
                return bad("times must be a nonempty list of positive numbers".into());
            }
        }
        Ok(())
    }

    /// The spectrum source named by `manifold`; `None` means `spectrum_csv`.
    pub fn manifold(&self) -> Result<Option<Manifold>, ConfigError> {
        match (&self.manifold, &self.spectrum_csv) {
            (Some(_), Some(_)) => Err(ConfigError::Schema("give either manifold or spectrum_csv, not both".into())),
            (None, None) => Err(ConfigError::Schema("a manifold or a spectrum_csv is required".into())),
            (None, Some(_)) => {
                if self.homogeneous.is_none() {
                    return Err(ConfigError::Schema("spectrum_csv needs homogeneous = [n, r]".into()));
                }
                Ok(None)
            }
            (Some(name), None) => {
                let m = Manifold::parse(name).ok_or_else(|| {
                    ConfigError::Schema(format!(
                        "unknown manifold {name:?}; expected torus1, torus2, torus3 or heisenberg, optionally with _analytic"
                    ))
                })?;
                if self.homogeneous.is_some() {
                    return Err(ConfigError::Schema("homogeneous is fixed by the manifold".into()));
                }
                Ok(Some(m))
            }
        }
    }

    pub fn quadrature(&self) -> PlancherelQuadrature {
        self.quadrature.unwrap_or_default()
    }

    pub fn discretization(&self) -> OscillatorDiscretization {
        self.discretization.unwrap_or(OscillatorDiscretization::hermite(160))
    }
}

fn check_keys(sub: Subcommand, map: &Map<String, Value>) -> Result<(), ConfigError> {
    let allowed = sub.keys();
    let unknown: Vec<&str> = map
        .keys()
        .map(String::as_str)
        .filter(|k| !allowed.contains(k) && *k != "tolerances" && *k != "out")
        .collect();
    if unknown.is_empty() {
        Ok(())
    } else {
        Err(ConfigError::Schema(format!("keys not accepted by {sub}: {}", unknown.join(", "))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn unknown_keys_rejected() {
        let err = ExperimentConfig::from_value(Subcommand::Weyl, json!({"manifold": "torus2", "colour": 3})).unwrap_err();
        assert!(err.to_string().contains("colour"));
        // a valid key for another subcommand is still refused
        assert!(ExperimentConfig::from_value(Subcommand::Weyl, json!({"manifold": "torus2", "matrix": "a.csv"})).is_err());
        assert!(ExperimentConfig::from_value(Subcommand::Weyl, json!({"manifold": "torus2", "tolerances": {"slack": 1}})).is_err());
    }

    #[test]
    fn tolerances_must_be_positive() {
        let v = json!({"manifold": "torus2", "tolerances": {"exponent": 0.0}});
        assert!(ExperimentConfig::from_value(Subcommand::Weyl, v).is_err());
    }

    #[test]
    fn manifold_names() {
        assert_eq!(Manifold::parse("torus2_analytic"), Some(Manifold::Torus { d: 2, analytic: true }));
        assert_eq!(Manifold::parse("heisenberg"), Some(Manifold::Heisenberg { analytic: false }));
        assert_eq!(Manifold::parse("sphere"), None);
        assert!(ExperimentConfig::from_value(Subcommand::Heat, json!({"manifold": "sphere"})).is_err());
        assert!(ExperimentConfig::from_value(Subcommand::Heat, json!({"spectrum_csv": "s.csv"})).is_err());
    }

    #[test]
    fn round_trip() {
        let cfg = ExperimentConfig::from_value(
            Subcommand::Alpha235,
            json!({"quadrature": {"energy_cutoff": 30.0, "rel_tol": 1e-5, "mu_min": 0.05, "b_min": -500.0, "b_max": 20.0},
                   "discretization": {"method": "hermite_basis", "basis": 120}}),
        )
        .unwrap();
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(ExperimentConfig::from_json(Subcommand::Alpha235, &text).unwrap(), cfg);
    }
}
