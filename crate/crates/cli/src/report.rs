//! Run reports and their deterministic text rendering.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::{ExperimentConfig, Subcommand};

/// A numeric result with its error estimate (zero for exact values).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quantity {
    pub name: String,
    pub value: f64,
    pub error: f64,
}

impl Quantity {
    pub fn new(name: impl Into<String>, value: f64, error: f64) -> Self {
        Self { name: name.into(), value, error }
    }

    pub fn exact(name: impl Into<String>, value: f64) -> Self {
        Self::new(name, value, 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// `|value - expected| / |expected| <= tolerance`.
    Relative,
    /// `|value - expected| <= tolerance`.
    Absolute,
    /// `value <= tolerance`.
    AtMost,
    /// `value > tolerance`.
    Above,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub comparison: Comparison,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected: Option<f64>,
    pub tolerance: f64,
    /// The quantity compared against the tolerance.
    pub deviation: f64,
    pub passed: bool,
}

impl Assertion {
    pub fn relative(name: impl Into<String>, value: f64, expected: f64, tolerance: f64) -> Self {
        let deviation = (value - expected).abs() / expected.abs();
        Self::build(name, Comparison::Relative, value, Some(expected), tolerance, deviation, deviation <= tolerance)
    }

    pub fn absolute(name: impl Into<String>, value: f64, expected: f64, tolerance: f64) -> Self {
        let deviation = (value - expected).abs();
        Self::build(name, Comparison::Absolute, value, Some(expected), tolerance, deviation, deviation <= tolerance)
    }

    pub fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self::build(name, Comparison::AtMost, value, None, bound, value, value <= bound)
    }

    pub fn above(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self::build(name, Comparison::Above, value, None, bound, value, value > bound)
    }

    fn build(
        name: impl Into<String>,
        comparison: Comparison,
        value: f64,
        expected: Option<f64>,
        tolerance: f64,
        deviation: f64,
        passed: bool,
    ) -> Self {
        Self { name: name.into(), comparison, value, expected, tolerance, deviation, passed }
    }

    fn describe(&self) -> String {
        let e = self.expected.map(g6).unwrap_or_default();
        match self.comparison {
            Comparison::Relative => format!(
                "{}: {} vs {e}, relative deviation {} {} tolerance {}",
                self.name,
                g6(self.value),
                g6(self.deviation),
                if self.passed { "<=" } else { ">" },
                g6(self.tolerance)
            ),
            Comparison::Absolute => format!(
                "{}: {} vs {e}, deviation {} {} tolerance {}",
                self.name,
                g6(self.value),
                g6(self.deviation),
                if self.passed { "<=" } else { ">" },
                g6(self.tolerance)
            ),
            Comparison::AtMost => format!(
                "{}: {} {} bound {}",
                self.name,
                g6(self.value),
                if self.passed { "<=" } else { ">" },
                g6(self.tolerance)
            ),
            Comparison::Above => format!(
                "{}: {} {} bound {}",
                self.name,
                g6(self.value),
                if self.passed { ">" } else { "<=" },
                g6(self.tolerance)
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    /// Every assertion passed.
    Passed,
    /// At least one assertion failed.
    Failed,
    /// A lower module refused the computation.
    Refused,
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Status::Passed => 0,
            Status::Failed => 1,
            Status::Refused => crate::EXIT_REFUSED,
        }
    }
}

/// Run environment; excluded from golden comparisons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub wall_time_s: f64,
    pub threads: usize,
    pub parallel: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub toolkit: String,
    pub version: String,
    pub subcommand: Subcommand,
    pub config: ExperimentConfig,
    pub status: Status,
    pub results: Vec<Quantity>,
    pub assertions: Vec<Assertion>,
    /// Structured records (fits, tables) as produced by the pipelines.
    pub details: Value,
    pub diagnostics: Vec<String>,
    pub metadata: Metadata,
}

impl RunReport {
    /// JSON without the metadata block, for golden comparisons.
    pub fn golden_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        if let Value::Object(map) = &mut v {
            map.remove("metadata");
        }
        serde_json::to_string_pretty(&v).expect("report serializes")
    }
}

/// `value` at six significant digits: positional for moderate magnitudes,
/// scientific otherwise.
pub fn g6(value: f64) -> String {
    if value == 0.0 {
        return "0".into();
    }
    if !value.is_finite() {
        return format!("{value}");
    }
    let sci = format!("{value:.5e}");
    let exp: i32 = sci.rsplit_once('e').and_then(|(_, e)| e.parse().ok()).unwrap_or(0);
    if (-4..6).contains(&exp) {
        let s = format!("{value:.*}", (5 - exp) as usize);
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        let (mantissa, e) = sci.split_once('e').expect("scientific format");
        let mantissa = if mantissa.contains('.') { mantissa.trim_end_matches('0').trim_end_matches('.') } else { mantissa };
        format!("{mantissa}e{e}")
    }
}

/// Human-readable summary; depends only on the report contents outside the
/// metadata block.
pub fn report_render(report: &RunReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} {} {}", report.toolkit, report.version, report.subcommand);
    if !report.results.is_empty() {
        let _ = writeln!(out, "results:");
        for q in &report.results {
            if q.error == 0.0 {
                let _ = writeln!(out, "  {} = {}", q.name, g6(q.value));
            } else {
                let _ = writeln!(out, "  {} = {} ± {}", q.name, g6(q.value), g6(q.error));
            }
        }
    }
    if !report.assertions.is_empty() {
        let _ = writeln!(out, "assertions:");
        for a in &report.assertions {
            let _ = writeln!(out, "  {} {}", if a.passed { "PASS" } else { "FAIL" }, a.describe());
        }
    }
    if !report.diagnostics.is_empty() {
        let _ = writeln!(out, "diagnostics:");
        for d in &report.diagnostics {
            let _ = writeln!(out, "  {d}");
        }
    }
    let passed = report.assertions.iter().filter(|a| a.passed).count();
    let total = report.assertions.len();
    let summary = match report.status {
        Status::Passed => format!("PASS ({passed}/{total} assertions)"),
        Status::Failed => {
            let failed: Vec<String> = report.assertions.iter().filter(|a| !a.passed).map(Assertion::describe).collect();
            format!("FAIL ({passed}/{total} assertions); {}", failed.join("; "))
        }
        Status::Refused => "REFUSED (numerical-quality refusal, see diagnostics)".to_string(),
    };
    let _ = writeln!(out, "summary: {summary}");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(g6(1.0), "1");
        assert_eq!(g6(0.0795774715), "0.0795775");
        assert_eq!(g6(47.30401301), "47.304");
        assert_eq!(g6(123456.7), "123457");
        assert_eq!(g6(1234567.0), "1.23457e6");
        assert_eq!(g6(-2.5e-7), "-2.5e-7");
        assert_eq!(g6(1e-10), "1e-10");
    }

    fn sample(assertions: Vec<Assertion>) -> RunReport {
        let status = if assertions.iter().all(|a| a.passed) { Status::Passed } else { Status::Failed };
        RunReport {
            toolkit: "hypospec".into(),
            version: "0.1.0".into(),
            subcommand: Subcommand::Weyl,
            config: ExperimentConfig::default(),
            status,
            results: vec![Quantity::new("exponent", 1.000012345, 0.00123), Quantity::exact("samples", 120.0)],
            assertions,
            details: Value::Null,
            diagnostics: Vec::new(),
            metadata: Metadata { wall_time_s: 0.5, threads: 1, parallel: false },
        }
    }

    #[test]
    fn rendering_is_deterministic_and_ignores_metadata() {
        let mut a = sample(vec![Assertion::relative("exponent", 1.0000123, 1.0, 0.05)]);
        let text = report_render(&a);
        assert_eq!(text, report_render(&a.clone()));
        a.metadata.wall_time_s = 99.0;
        assert_eq!(text, report_render(&a));
        assert!(text.contains("exponent = 1.00001 ± 0.00123"));
        assert!(text.ends_with("summary: PASS (1/1 assertions)\n"));
    }

    #[test]
    fn failed_assertion_names_the_tolerance() {
        let r = sample(vec![Assertion::relative("exponent", 1.2, 1.0, 0.05), Assertion::above("a0", 0.1, 0.0)]);
        let text = report_render(&r);
        let summary = text.lines().last().unwrap();
        assert!(summary.starts_with("summary: FAIL (1/2 assertions)"), "{summary}");
        assert!(summary.contains("relative deviation 0.2 > tolerance 0.05"), "{summary}");
    }

    #[test]
    fn comparisons() {
        assert!(Assertion::absolute("index", 1.0, 1.0, 0.0).passed);
        assert!(!Assertion::at_most("ratio", 1.5, 1.0).passed);
        assert!(!Assertion::above("a0", 0.0, 0.0).passed);
    }
}
