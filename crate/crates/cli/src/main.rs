use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser};
use hypospec_cli::{report_render, run, ConfigError, ExperimentConfig, Subcommand, EXIT_CONFIG};
use num_complex::Complex64;
use serde_json::{json, Map, Value};

#[derive(Parser)]
#[command(name = "hypospec", version, about = "Spectral experiments on Carnot groups and nilmanifolds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Subcommand)]
enum Command {
    /// Eigenvalues of a torus or Heisenberg nilmanifold operator.
    Spectrum(Flags),
    /// Weyl-law fit of the counting function.
    Weyl(Flags),
    /// Heat-trace coefficients and the parity check.
    Heat(Flags),
    /// Spectral zeta function by direct sum and Mellin continuation.
    Zeta(Flags),
    /// Non-commutative residue from the leading pole of zeta.
    Ncr(Flags),
    /// McKean-Singer supertrace of a matrix.
    Index(Flags),
    /// Weyl constant of the (2,3,5) Carnot group.
    Alpha235(Flags),
    /// Structural checks of a graded nilpotent Lie algebra.
    Validate(Flags),
}

/// Flags override the keys of the `--config` document with the same name.
#[derive(Args, Debug, Default)]
struct Flags {
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for report.json and data/*.csv.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    manifold: Option<String>,
    /// Grid points per direction.
    #[arg(long = "N")]
    resolution: Option<usize>,
    #[arg(long)]
    m_max: Option<usize>,
    #[arg(long)]
    eigen_count: Option<usize>,
    #[arg(long)]
    lambda_max: Option<f64>,
    #[arg(long)]
    spectrum_csv: Option<PathBuf>,
    /// Homogeneous dimension and order, as `n,r`.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    homogeneous: Option<Vec<usize>>,
    #[arg(long)]
    trust_cutoff: Option<f64>,
    /// Weyl fit window, as `lo,hi`.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    window: Option<Vec<f64>>,
    #[arg(long)]
    j_max: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    /// Zeta argument such as `3` or `2+1i`; repeatable.
    #[arg(long)]
    z: Vec<String>,
    #[arg(long)]
    power: Option<u32>,
    /// Matrix CSV for `index`.
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// Comma-separated times for `index`.
    #[arg(long, value_delimiter = ',')]
    times: Option<Vec<f64>>,
    #[arg(long)]
    algebra: Option<String>,
    #[arg(long)]
    algebra_file: Option<PathBuf>,
    /// Hermite basis size for the oscillator levels.
    #[arg(long, conflicts_with = "grid_points")]
    basis: Option<usize>,
    /// Grid size for the oscillator levels.
    #[arg(long)]
    grid_points: Option<usize>,
    #[arg(long)]
    energy_cutoff: Option<f64>,
    #[arg(long)]
    rel_tol: Option<f64>,
    #[arg(long)]
    mu_min: Option<f64>,
    #[arg(long)]
    b_min: Option<f64>,
    #[arg(long)]
    b_max: Option<f64>,
}

impl Command {
    fn split(self) -> (Subcommand, Flags) {
        match self {
            Command::Spectrum(f) => (Subcommand::Spectrum, f),
            Command::Weyl(f) => (Subcommand::Weyl, f),
            Command::Heat(f) => (Subcommand::Heat, f),
            Command::Zeta(f) => (Subcommand::Zeta, f),
            Command::Ncr(f) => (Subcommand::Ncr, f),
            Command::Index(f) => (Subcommand::Index, f),
            Command::Alpha235(f) => (Subcommand::Alpha235, f),
            Command::Validate(f) => (Subcommand::Validate, f),
        }
    }
}

fn parse_z(text: &str) -> Result<Value, ConfigError> {
    let z = Complex64::from_str(text.trim()).map_err(|_| ConfigError::Schema(format!("bad complex number {text:?}")))?;
    Ok(json!([z.re, z.im]))
}

/// The configuration document with flag overrides applied.
fn merged(flags: &Flags) -> Result<Value, ConfigError> {
    let mut map = match &flags.config {
        Some(path) => {
            let text =
                fs::read_to_string(path).map_err(|e| ConfigError::Input(format!("{}: {e}", path.display())))?;
            match serde_json::from_str(&text).map_err(|e| ConfigError::Schema(format!("{}: {e}", path.display())))? {
                Value::Object(m) => m,
                _ => return Err(ConfigError::Schema(format!("{}: configuration must be a JSON object", path.display()))),
            }
        }
        None => Map::new(),
    };
    let mut set = |key: &str, v: Option<Value>| {
        if let Some(v) = v {
            map.insert(key.to_string(), v);
        }
    };
    set("out", flags.out.as_ref().map(|p| json!(p)));
    set("manifold", flags.manifold.as_ref().map(|v| json!(v)));
    set("resolution", flags.resolution.map(|v| json!(v)));
    set("m_max", flags.m_max.map(|v| json!(v)));
    set("eigen_count", flags.eigen_count.map(|v| json!(v)));
    set("lambda_max", flags.lambda_max.map(|v| json!(v)));
    set("spectrum_csv", flags.spectrum_csv.as_ref().map(|v| json!(v)));
    set("homogeneous", flags.homogeneous.as_ref().map(|v| json!(v)));
    set("trust_cutoff", flags.trust_cutoff.map(|v| json!(v)));
    set("window", flags.window.as_ref().map(|v| json!(v)));
    set("j_max", flags.j_max.map(|v| json!(v)));
    set("samples", flags.samples.map(|v| json!(v)));
    set("power", flags.power.map(|v| json!(v)));
    set("matrix", flags.matrix.as_ref().map(|v| json!(v)));
    set("times", flags.times.as_ref().map(|v| json!(v)));
    set("algebra", flags.algebra.as_ref().map(|v| json!(v)));
    set("algebra_file", flags.algebra_file.as_ref().map(|v| json!(v)));
    set("discretization", flags.basis.map(|b| json!({"method": "hermite_basis", "basis": b})));
    set("discretization", flags.grid_points.map(|p| json!({"method": "grid", "half_width": null, "points": p})));
    if !flags.z.is_empty() {
        let zs = flags.z.iter().map(|s| parse_z(s)).collect::<Result<Vec<_>, _>>()?;
        map.insert("z".into(), Value::Array(zs));
    }
    let quad = [
        ("energy_cutoff", flags.energy_cutoff),
        ("rel_tol", flags.rel_tol),
        ("mu_min", flags.mu_min),
        ("b_min", flags.b_min),
        ("b_max", flags.b_max),
    ];
    if quad.iter().any(|(_, v)| v.is_some()) {
        let base = map
            .remove("quadrature")
            .unwrap_or_else(|| serde_json::to_value(hypospec::plancherel::PlancherelQuadrature::default()).expect("serializes"));
        let Value::Object(mut q) = base else {
            return Err(ConfigError::Schema("quadrature must be an object".into()));
        };
        for (k, v) in quad {
            if let Some(v) = v {
                q.insert(k.into(), json!(v));
            }
        }
        map.insert("quadrature".into(), Value::Object(q));
    }
    Ok(Value::Object(map))
}

/// Creates `dir` and checks that files can be written inside it.
fn writable(dir: &Path) -> Result<(), ConfigError> {
    let fail = |e: std::io::Error| ConfigError::Input(format!("output directory {} not writable: {e}", dir.display()));
    fs::create_dir_all(dir).map_err(fail)?;
    let probe = dir.join(".hypospec-write-test");
    fs::write(&probe, b"").map_err(fail)?;
    fs::remove_file(&probe).map_err(fail)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (sub, flags) = cli.command.split();
    let cfg = match merged(&flags).and_then(|v| ExperimentConfig::from_value(sub, v)) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("hypospec {sub}: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if let Some(dir) = &cfg.out {
        if let Err(e) = writable(dir) {
            eprintln!("hypospec {sub}: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    }
    let output = match run(sub, &cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("hypospec {sub}: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    print!("{}", report_render(&output.report));
    if let Some(dir) = &cfg.out {
        if let Err(e) = output.write(dir) {
            eprintln!("hypospec {sub}: {e}");
            return ExitCode::from(e.exit_code());
        }
    }
    ExitCode::from(output.exit_code())
}
