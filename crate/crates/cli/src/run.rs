//! Subcommand pipelines.

use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use hypospec::asymptotics::{
    fit_spectrum, fit_window, heat_trace, log_spaced, mckean_singer, mellin_samples, ncr_value, zeta_mellin,
    zeta_residue_by_limit, zeta_spectral, AsymptoticFit, FitWindow, HeatTraceSamples, ImageRule, WindowRules,
};
use hypospec::carnot::{GradedNilpotentLieAlgebra, Violation};
use hypospec::linalg::DenseMatrix;
use hypospec::nilmanifold::{heisenberg_sublaplacian, torus_laplacian, DiscretizedOperator};
use hypospec::plancherel::alpha0_estimate;
use hypospec::special::gamma_real;
use hypospec::spectral::{
    counting_function, fibered_spectrum, heisenberg_analytic, torus_analytic, torus_analytic_count, weyl_fit, Count, Source,
    Spectrum,
};
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, Manifold, Subcommand};
use crate::report::{Assertion, Metadata, Quantity, RunReport, Status};
use crate::{ConfigError, Error};

/// A CSV table written under `data/`.
#[derive(Debug, Clone, PartialEq)]
pub struct DataFile {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl DataFile {
    fn new(name: &str, header: &[&str]) -> Self {
        Self { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    fn push(&mut self, row: impl IntoIterator<Item = String>) {
        self.rows.push(row.into_iter().collect());
    }
}

/// A finished run: the report plus its data tables.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: RunReport,
    pub data: Vec<DataFile>,
}

impl RunOutput {
    pub fn exit_code(&self) -> u8 {
        self.report.status.exit_code()
    }

    /// Writes `report.json`, `report.txt` and `data/*.csv` under `dir`.
    pub fn write(&self, dir: &Path) -> Result<(), Error> {
        let data_dir = dir.join("data");
        fs::create_dir_all(&data_dir)?;
        fs::write(dir.join("report.json"), serde_json::to_string_pretty(&self.report)? + "\n")?;
        fs::write(dir.join("report.txt"), crate::report_render(&self.report))?;
        for file in &self.data {
            let mut w = csv::Writer::from_path(data_dir.join(format!("{}.csv", file.name)))?;
            w.write_record(&file.header)?;
            for row in &file.rows {
                w.write_record(row)?;
            }
            w.flush()?;
        }
        Ok(())
    }
}

/// What a pipeline produces before the report is assembled.
#[derive(Default)]
struct Outcome {
    results: Vec<Quantity>,
    assertions: Vec<Assertion>,
    details: serde_json::Map<String, Value>,
    diagnostics: Vec<String>,
    data: Vec<DataFile>,
}

/// Failure inside a pipeline: bad input (exit 2) or a numerical refusal (exit 3).
enum Failure {
    Config(ConfigError),
    Numerical(hypospec::Error),
}

impl From<hypospec::Error> for Failure {
    fn from(e: hypospec::Error) -> Self {
        use hypospec::Error as E;
        match e {
            E::Io(_) | E::Json(_) | E::Csv(_) | E::Parse(_) | E::InvalidAlgebra(_) | E::Resolution { .. } => {
                Failure::Config(ConfigError::Input(e.to_string()))
            }
            other => Failure::Numerical(other),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

type Step<T> = std::result::Result<T, Failure>;

/// Runs `sub` with a validated configuration. Input problems come back as
/// [`Error::Config`]; numerical refusals produce a report with status
/// [`Status::Refused`].
pub fn run(sub: Subcommand, cfg: &ExperimentConfig) -> Result<RunOutput, Error> {
    cfg.validate(sub)?;
    let start = Instant::now();
    let outcome = match sub {
        Subcommand::Spectrum => spectrum(cfg),
        Subcommand::Weyl => weyl(cfg),
        Subcommand::Heat => heat(cfg),
        Subcommand::Zeta => zeta(cfg),
        Subcommand::Ncr => ncr(cfg),
        Subcommand::Index => index(cfg),
        Subcommand::Alpha235 => alpha235(cfg),
        Subcommand::Validate => validate(cfg),
    };
    let (outcome, refused) = match outcome {
        Ok(o) => (o, false),
        Err(Failure::Config(e)) => return Err(Error::Config(e)),
        Err(Failure::Numerical(e)) => (Outcome { diagnostics: vec![e.to_string()], ..Default::default() }, true),
    };
    let status = if refused {
        Status::Refused
    } else if outcome.assertions.iter().all(|a| a.passed) {
        Status::Passed
    } else {
        Status::Failed
    };
    let report = RunReport {
        toolkit: "hypospec".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        subcommand: sub,
        config: cfg.clone(),
        status,
        results: outcome.results,
        assertions: outcome.assertions,
        details: Value::Object(outcome.details),
        diagnostics: outcome.diagnostics,
        metadata: Metadata {
            wall_time_s: start.elapsed().as_secs_f64(),
            threads: hypospec::par::num_threads(),
            parallel: cfg!(feature = "parallel"),
        },
    };
    Ok(RunOutput { report, data: outcome.data })
}

fn num(v: f64) -> String {
    format!("{v:e}")
}

/// The spectrum named by the configuration, its operators when discretized,
/// and its homogeneous dimension and order.
struct Loaded {
    spectrum: Spectrum,
    ops: Vec<DiscretizedOperator>,
    manifold: Option<Manifold>,
    n: usize,
    r: usize,
}

fn load_spectrum(cfg: &ExperimentConfig) -> Step<Loaded> {
    let manifold = cfg.manifold()?;
    let count = cfg.eigen_count.map_or(Count::All, Count::Smallest);
    let Some(m) = manifold else {
        let path = cfg.spectrum_csv.as_ref().expect("validated");
        let (n, r) = cfg.homogeneous.expect("validated");
        let file = fs::File::open(path).map_err(|e| ConfigError::Input(format!("{}: {e}", path.display())))?;
        let spectrum = Spectrum::read_csv(
            file,
            Source::Synthetic(path.display().to_string()),
            cfg.trust_cutoff.unwrap_or(f64::INFINITY),
        )?;
        return Ok(Loaded { spectrum, ops: Vec::new(), manifold: None, n, r });
    };
    let (n, r) = m.homogeneous();
    let (mut spectrum, ops) = match m {
        Manifold::Torus { d, analytic: true } => {
            let s = match cfg.lambda_max {
                Some(l) => torus_analytic(d, l)?,
                None => torus_analytic_count(d, cfg.eigen_count.unwrap_or(10_000))?,
            };
            (s, Vec::new())
        }
        Manifold::Torus { d, analytic: false } => {
            let res = cfg.resolution.unwrap_or([256, 32, 12][d - 1]);
            let op = torus_laplacian(d, res)?;
            (fibered_spectrum(std::slice::from_ref(&op), count, &op.label)?, vec![op])
        }
        Manifold::Heisenberg { analytic: true } => (heisenberg_analytic(cfg.lambda_max.unwrap_or(3.0e4))?, Vec::new()),
        Manifold::Heisenberg { analytic: false } => {
            let res = cfg.resolution.unwrap_or(32);
            let ops = heisenberg_sublaplacian(res, cfg.m_max.unwrap_or(8))?;
            (fibered_spectrum(&ops, count, &format!("heisenberg(N={res})"))?, ops)
        }
    };
    if let Some(c) = cfg.trust_cutoff {
        spectrum.trust_cutoff = spectrum.trust_cutoff.min(c);
    }
    Ok(Loaded { spectrum, ops, manifold: Some(m), n, r })
}

fn image_rule(m: Option<Manifold>, power: u32) -> Option<ImageRule> {
    match m? {
        Manifold::Torus { .. } => Some(ImageRule { length: 1.0, power }),
        Manifold::Heisenberg { .. } => Some(ImageRule { length: 2f64.sqrt(), power }),
    }
}

fn spectrum_table(s: &Spectrum) -> DataFile {
    let mut f = DataFile::new("spectrum", &["eigenvalue", "multiplicity"]);
    for (v, k) in s.pairs() {
        f.push([num(v), k.to_string()]);
    }
    f
}

fn describe_source(out: &mut Outcome, src: &Loaded) {
    let s = &src.spectrum;
    out.results.push(Quantity::exact("eigenvalues", s.multiplicities.iter().sum::<usize>() as f64));
    out.results.push(Quantity::exact("distinct_eigenvalues", s.eigenvalues.len() as f64));
    out.results.push(Quantity::exact("kernel_dim", s.kernel_dim as f64));
    if s.trust_cutoff.is_finite() {
        out.results.push(Quantity::exact("trust_cutoff", s.trust_cutoff));
    }
    out.details.insert("source".into(), json!(s.source));
    out.details.insert("homogeneous".into(), json!([src.n, src.r]));
    if s.partial {
        out.diagnostics.push("iterative eigensolver returned a partial spectrum".into());
    }
}

fn spectrum(cfg: &ExperimentConfig) -> Step<Outcome> {
    let src = load_spectrum(cfg)?;
    let mut out = Outcome::default();
    describe_source(&mut out, &src);
    let s = &src.spectrum;
    if let Some(first) = s.eigenvalues.iter().copied().find(|&v| v > 0.0) {
        out.results.push(Quantity::exact("first_nonzero_eigenvalue", first));
    }
    if !src.ops.is_empty() {
        let defect = src
            .ops
            .iter()
            .map(|op| op.matrix.hermitian_defect() / op.matrix.inf_norm().max(1.0))
            .fold(0.0, f64::max);
        let norm = src.ops.iter().map(|op| op.matrix.inf_norm()).fold(0.0, f64::max).max(1.0);
        let lowest = s.eigenvalues.first().copied().unwrap_or(0.0) / norm;
        out.assertions.push(Assertion::at_most("relative_hermitian_defect", defect, 1e-12));
        out.assertions.push(Assertion::above("relative_lowest_eigenvalue", lowest, -1e-9));
    }
    if src.manifold.is_some() {
        out.assertions.push(Assertion::absolute("kernel_dim", s.kernel_dim as f64, 1.0, 0.0));
    }
    out.data.push(spectrum_table(s));
    Ok(out)
}

fn weyl(cfg: &ExperimentConfig) -> Step<Outcome> {
    let src = load_spectrum(cfg)?;
    let mut out = Outcome::default();
    describe_source(&mut out, &src);
    let tol = cfg.tolerances;
    let a0 = src.manifold.map(Manifold::a0);
    let fit = weyl_fit(&src.spectrum, Some((src.n, src.r)), a0, cfg.window)?;
    let d = src.n as f64 / src.r as f64;
    out.results.push(Quantity::new("exponent", fit.exponent_est, fit.exponent_stderr));
    out.results.push(Quantity::new("constant", fit.constant_est, fit.constant_stderr));
    let g = gamma_real(1.0 + d);
    out.results.push(Quantity::new("implied_a0", fit.constant_est * g, fit.constant_stderr * g));
    if let (Some(c), Some(e)) = (fit.constant_pinned, fit.constant_pinned_stderr) {
        out.results.push(Quantity::new("constant_pinned", c, e));
    }
    out.results.push(Quantity::exact("fit_residual", fit.residual));
    out.assertions.push(Assertion::relative("exponent", fit.exponent_est, d, tol.exponent));
    match (src.manifold, fit.theory_constant) {
        // the discretized nilmanifold is still pre-asymptotic below its trust cutoff
        (Some(Manifold::Heisenberg { analytic: false }), _) | (None, _) => {
            out.assertions.push(Assertion::above("implied_a0", fit.constant_est * g, 0.0));
        }
        (Some(_), Some(c)) => {
            let est = fit.constant_pinned.unwrap_or(fit.constant_est);
            out.assertions.push(Assertion::relative("constant", est, c, tol.constant));
        }
        (Some(_), None) => {}
    }
    out.details.insert("weyl_fit".into(), json!(fit));
    let mut table = DataFile::new("counting", &["lambda", "count"]);
    for &v in src.spectrum.eigenvalues.iter().filter(|&&v| v <= src.spectrum.trust_cutoff) {
        table.push([num(v), counting_function(&src.spectrum, v).to_string()]);
    }
    out.data.push(table);
    Ok(out)
}

struct Fitted {
    src: Loaded,
    rules: WindowRules,
    window: FitWindow,
    fit: AsymptoticFit,
}

fn fitted(cfg: &ExperimentConfig, out: &mut Outcome) -> Step<Fitted> {
    let src = load_spectrum(cfg)?;
    describe_source(out, &src);
    let rules = WindowRules { image: image_rule(src.manifold, 1), ..Default::default() };
    let window = fit_window(&src.spectrum, src.n, src.r, &rules)?;
    let fit = fit_spectrum(&src.spectrum, src.n, src.r, cfg.j_max.unwrap_or(3), &rules, cfg.samples.unwrap_or(60))?;
    out.details.insert("fit_window".into(), json!(window));
    out.details.insert("heat_fit".into(), json!(fit));
    Ok(Fitted { src, rules, window, fit })
}

fn coefficient_results(out: &mut Outcome, fit: &AsymptoticFit) {
    for (j, (a, e)) in fit.coefficients.iter().zip(&fit.std_errors).enumerate() {
        out.results.push(Quantity::new(format!("a{j}"), *a, *e));
    }
}

fn heat(cfg: &ExperimentConfig) -> Step<Outcome> {
    let mut out = Outcome::default();
    let f = fitted(cfg, &mut out)?;
    let tol = cfg.tolerances;
    coefficient_results(&mut out, &f.fit);
    out.results.push(Quantity::exact("fit_residual", f.fit.residual));
    out.results.push(Quantity::exact("condition_number", f.fit.condition_number));
    out.assertions.push(Assertion::above("a0", f.fit.a0(), 0.0));
    if f.fit.coefficients.len() > 1 {
        out.assertions.push(Assertion::at_most("max_odd_ratio", f.fit.max_odd_ratio(), tol.parity));
    }
    if let Some(m) = f.src.manifold {
        out.assertions.push(Assertion::relative("a0_exact", f.fit.a0(), m.a0(), tol.residue));
    }
    let samples: HeatTraceSamples =
        heat_trace(&f.src.spectrum, &log_spaced(f.window.t_min, f.window.t_max, cfg.samples.unwrap_or(60)))?;
    let mut table = DataFile::new("heat_trace", &["t", "trace", "fitted"]);
    for (&t, &v) in samples.times.iter().zip(&samples.values) {
        let fitted: f64 = f.fit.coefficients.iter().zip(&f.fit.exponents).map(|(a, e)| a * t.powf(*e)).sum();
        table.push([num(t), num(v), num(fitted)]);
    }
    out.data.push(table);
    Ok(out)
}

fn zeta(cfg: &ExperimentConfig) -> Step<Outcome> {
    let mut out = Outcome::default();
    let f = fitted(cfg, &mut out)?;
    let tol = cfg.tolerances;
    let (n, r) = (f.src.n, f.src.r);
    let d = n as f64 / r as f64;
    let kernel = f.src.spectrum.kernel_dim;
    let samples = mellin_samples(&f.src.spectrum, f.window.t_min, 40)?;
    let res = zeta_residue_by_limit(&samples, kernel, &f.fit, 0)?;
    out.results.push(Quantity::new("residue", res.value, res.error));
    out.assertions.push(Assertion::relative("residue_vs_fit", res.value, f.fit.a0() / gamma_real(d), tol.residue));
    if let Some(m) = f.src.manifold {
        out.assertions.push(Assertion::relative("residue_exact", res.value, m.a0() / gamma_real(d), tol.residue));
    }
    let zs: Vec<Complex64> = match &cfg.z {
        Some(list) => list.iter().map(|[re, im]| Complex64::new(*re, *im)).collect(),
        None => vec![Complex64::new(d + 1.0, 0.0), Complex64::new(d + 1.5, 0.0), Complex64::new(d + 1.0, 1.0)],
    };
    let mut table = DataFile::new("zeta", &["re_z", "im_z", "method", "re_value", "im_value", "error"]);
    let mut records = Vec::new();
    for (i, z) in zs.iter().enumerate() {
        let mellin = zeta_mellin(&samples, kernel, *z, &f.fit)?;
        out.results.push(Quantity::new(format!("zeta[{i}].re"), mellin.value.re, mellin.error));
        out.results.push(Quantity::new(format!("zeta[{i}].im"), mellin.value.im, mellin.error));
        table.push([num(z.re), num(z.im), format!("{:?}", mellin.method), num(mellin.value.re), num(mellin.value.im), num(mellin.error)]);
        let mut record = json!({ "z": [z.re, z.im], "mellin": mellin });
        if z.re > d {
            let spectral = zeta_spectral(&f.src.spectrum, *z, n, r);
            table.push([
                num(z.re),
                num(z.im),
                format!("{:?}", spectral.method),
                num(spectral.value.re),
                num(spectral.value.im),
                num(spectral.error),
            ]);
            if z.re >= d + 1.0 {
                let ratio = (spectral.value - mellin.value).norm() / (spectral.error + mellin.error);
                out.assertions.push(Assertion::at_most(format!("zeta[{i}]_methods_within_error_bars"), ratio, 1.0));
            }
            record["spectral"] = json!(spectral);
        }
        records.push(record);
    }
    out.details.insert("zeta".into(), Value::Array(records));
    out.data.push(table);
    Ok(out)
}

fn ncr(cfg: &ExperimentConfig) -> Step<Outcome> {
    let mut out = Outcome::default();
    let f = fitted(cfg, &mut out)?;
    let tol = cfg.tolerances;
    let (n, r) = (f.src.n, f.src.r);
    let spec = &f.src.spectrum;
    let samples = mellin_samples(spec, f.window.t_min, 40)?;
    let rep = ncr_value(&samples, spec.kernel_dim, &f.fit, Some(spec))?;
    out.results.push(Quantity::new("tau", rep.tau, rep.tau_error));
    out.results.push(Quantity::new("tau_direct", rep.tau_direct, r as f64 * f.fit.std_errors[0] / gamma_real(n as f64 / r as f64)));
    out.results.push(Quantity::new("predicted", rep.predicted, r as f64 * f.fit.std_errors[0] / gamma_real(n as f64 / r as f64)));
    out.assertions.push(Assertion::relative("tau_vs_heat_coefficient", rep.tau, rep.predicted, tol.residue));
    if let Some(m) = f.src.manifold {
        let exact = r as f64 * m.a0() / gamma_real(n as f64 / r as f64);
        out.assertions.push(Assertion::relative("tau_exact", rep.tau, exact, tol.residue));
    }
    out.details.insert("ncr".into(), json!(rep));
    let mut table = DataFile::new("ncr", &["power", "tau", "tau_error", "predicted"]);
    table.push(["1".to_string(), num(rep.tau), num(rep.tau_error), num(rep.predicted)]);
    if let Some(p) = cfg.power.filter(|&p| p > 1) {
        let powered = spec.power(p as f64);
        let rules = WindowRules { image: f.rules.image.map(|i| ImageRule { power: p, ..i }), ..f.rules };
        let pr = r * p as usize;
        let fit = fit_spectrum(&powered, n, pr, cfg.j_max.unwrap_or(3), &rules, cfg.samples.unwrap_or(60))?;
        let w = fit_window(&powered, n, pr, &rules)?;
        let s = mellin_samples(&powered, w.t_min, 40)?;
        let rp = ncr_value(&s, powered.kernel_dim, &fit, Some(&powered))?;
        out.results.push(Quantity::new(format!("tau_power_{p}"), rp.tau, rp.tau_error));
        out.assertions.push(Assertion::relative(format!("tau_power_{p}_invariance"), rp.tau, rep.tau, tol.residue));
        table.push([p.to_string(), num(rp.tau), num(rp.tau_error), num(rp.predicted)]);
        out.details.insert("ncr_power".into(), json!({ "power": p, "report": rp }));
    }
    out.data.push(table);
    Ok(out)
}

/// Reads a matrix from CSV: one row per record, entries parsed as complex
/// numbers (`1`, `-0.5`, `1+2i`).
pub fn read_matrix(path: &Path) -> Result<DenseMatrix, ConfigError> {
    let bad = |msg: String| ConfigError::Input(format!("{}: {msg}", path.display()));
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| bad(e.to_string()))?;
    let mut rows: Vec<Vec<Complex64>> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        let row = record
            .iter()
            .map(|f| Complex64::from_str(f).map_err(|_| bad(format!("bad matrix entry {f:?}"))))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    let cols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || cols == 0 {
        return Err(bad("empty matrix".into()));
    }
    if rows.iter().any(|r| r.len() != cols) {
        return Err(bad("rows have different lengths".into()));
    }
    Ok(DenseMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

fn index(cfg: &ExperimentConfig) -> Step<Outcome> {
    let path = cfg.matrix.as_ref().expect("validated");
    let d = read_matrix(path)?;
    let times = cfg.times.clone().unwrap_or_else(|| vec![0.1, 1.0, 10.0]);
    let rep = mckean_singer(&d, &times)?;
    let mut out = Outcome::default();
    out.results.push(Quantity::exact("rows", rep.rows as f64));
    out.results.push(Quantity::exact("cols", rep.cols as f64));
    out.results.push(Quantity::exact("dim_ker_d", rep.dim_ker_d as f64));
    out.results.push(Quantity::exact("dim_ker_dstar", rep.dim_ker_dstar as f64));
    out.results.push(Quantity::exact("index", rep.index as f64));
    let scale = (rep.index.unsigned_abs() as f64).max(1.0);
    for (t, s) in &rep.s_table {
        out.results.push(Quantity::new(format!("s({t})"), *s, (s - rep.index as f64).abs() / scale));
    }
    out.assertions.push(Assertion::at_most("supertrace_drift", rep.max_drift, cfg.tolerances.drift));
    out.assertions.push(Assertion::at_most("ambiguous_singular_values", rep.ill_posed as f64, 0.0));
    let mut table = DataFile::new("supertrace", &["t", "s"]);
    for (t, s) in &rep.s_table {
        table.push([num(*t), num(*s)]);
    }
    out.details.insert("index".into(), json!(rep));
    out.data.push(table);
    Ok(out)
}

fn alpha235(cfg: &ExperimentConfig) -> Step<Outcome> {
    let quad = cfg.quadrature();
    let disc = cfg.discretization();
    let rep = alpha0_estimate(&quad, &disc)?;
    let mut out = Outcome::default();
    if let Some(a) = rep.alpha0 {
        out.results.push(Quantity::new("alpha0", a, rep.error_bar));
    }
    out.results.push(Quantity::new("reduced_moment", rep.reduced_moment.value, rep.reduced_moment.error()));
    let mut table = DataFile::new("cross_checks", &["name", "a", "b", "relative_difference", "tolerance", "passed"]);
    for c in &rep.cross_checks {
        out.results.push(Quantity::exact(format!("ratio.{}", c.name), c.a / c.b));
        out.assertions.push(Assertion::at_most(c.name.clone(), c.relative_difference, c.tolerance));
        table.push([c.name.clone(), num(c.a), num(c.b), num(c.relative_difference), num(c.tolerance), c.passed.to_string()]);
    }
    if rep.alpha0.is_none() {
        out.assertions.push(Assertion::above("alpha0_available", 0.0, 0.0));
    }
    out.diagnostics.extend(rep.diagnostics.iter().cloned());
    out.details.insert("convention".into(), json!(rep.convention));
    out.details.insert("alpha0".into(), json!(rep));
    out.data.push(table);
    Ok(out)
}

fn validate(cfg: &ExperimentConfig) -> Step<Outcome> {
    let alg = match (&cfg.algebra, &cfg.algebra_file) {
        (_, Some(path)) => {
            let text = fs::read_to_string(path).map_err(|e| ConfigError::Input(format!("{}: {e}", path.display())))?;
            GradedNilpotentLieAlgebra::from_json(&text)?
        }
        (Some(name), None) => GradedNilpotentLieAlgebra::builtin(name)?,
        (None, None) => GradedNilpotentLieAlgebra::carnot_235(),
    };
    let violations: Vec<Violation> = alg.validate();
    let mut out = Outcome::default();
    out.results.push(Quantity::exact("dimension", alg.dim() as f64));
    out.results.push(Quantity::exact("homogeneous_dimension", alg.homogeneous_dimension() as f64));
    out.results.push(Quantity::exact("step", alg.step() as f64));
    out.results.push(Quantity::exact("violations", violations.len() as f64));
    out.assertions.push(Assertion::at_most("violations", violations.len() as f64, 0.0));
    out.details.insert("algebra".into(), json!(alg.name()));
    out.details.insert("degrees".into(), json!(alg.degrees()));
    out.details.insert("violations".into(), json!(violations));
    let mut table = DataFile::new("structure_constants", &["i", "j", "k", "c_ijk"]);
    for i in 0..alg.dim() {
        for j in 0..alg.dim() {
            for k in 0..alg.dim() {
                let c = alg.c(i, j, k);
                if c != 0.0 {
                    table.push([i.to_string(), j.to_string(), k.to_string(), num(c)]);
                }
            }
        }
    }
    out.data.push(table);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Tolerances;

    fn torus_cfg() -> ExperimentConfig {
        ExperimentConfig { manifold: Some("torus2_analytic".into()), ..Default::default() }
    }

    #[test]
    fn weyl_on_exact_torus() {
        let out = run(Subcommand::Weyl, &torus_cfg()).unwrap();
        assert_eq!(out.report.status, Status::Passed, "{:?}", out.report.assertions);
        let exp = out.report.results.iter().find(|q| q.name == "exponent").unwrap();
        assert!((exp.value - 1.0).abs() < 0.01 && exp.error > 0.0);
    }

    #[test]
    fn heat_zeta_ncr_on_exact_torus() {
        for sub in [Subcommand::Heat, Subcommand::Zeta, Subcommand::Ncr] {
            let out = run(sub, &torus_cfg()).unwrap();
            assert_eq!(out.report.status, Status::Passed, "{sub}: {:?}", out.report.assertions);
        }
        let cfg = ExperimentConfig { power: Some(2), ..torus_cfg() };
        let out = run(Subcommand::Ncr, &cfg).unwrap();
        assert!(out.report.assertions.iter().any(|a| a.name == "tau_power_2_invariance" && a.passed));
    }

    #[test]
    fn tight_tolerance_fails() {
        let cfg = ExperimentConfig { tolerances: Tolerances { exponent: 1e-9, ..Default::default() }, ..torus_cfg() };
        let out = run(Subcommand::Weyl, &cfg).unwrap();
        assert_eq!(out.report.status, Status::Failed);
        assert_eq!(out.exit_code(), 1);
    }

    #[test]
    fn refusal_is_reported() {
        // too few eigenvalues for any fit window
        let cfg = ExperimentConfig { eigen_count: Some(20), ..torus_cfg() };
        let out = run(Subcommand::Heat, &cfg).unwrap();
        assert_eq!(out.report.status, Status::Refused);
        assert_eq!(out.exit_code(), crate::EXIT_REFUSED);
        assert!(!out.report.diagnostics.is_empty());
    }

    #[test]
    fn validate_builtin() {
        let out = run(Subcommand::Validate, &ExperimentConfig { algebra: Some("carnot235".into()), ..Default::default() }).unwrap();
        assert_eq!(out.report.status, Status::Passed);
        let n = out.report.results.iter().find(|q| q.name == "homogeneous_dimension").unwrap();
        assert_eq!(n.value, 10.0);
    }
}
