use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid algebra: {0}")]
    InvalidAlgebra(String),

    #[error("unsupported step {step}: the exact group law is only available up to step 3")]
    UnsupportedStep { step: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("block shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("operators act on different algebras")]
    AlgebraMismatch,

    #[error("terms have different Heisenberg weights: {0:?}")]
    MixedOrder(Vec<usize>),

    #[error("exponent condition r_i s_i = kappa violated for (r, s) pairs {pairs:?}")]
    ExponentCondition { pairs: Vec<(usize, usize)> },

    #[error("resolution {got} is below the minimum {min}")]
    Resolution { got: usize, min: usize },

    #[error("flux quantization violated in fiber m = {fiber}: boundary phase defect {defect:.3e}")]
    FluxQuantization { fiber: i64, defect: f64 },

    #[error("assembly unreliable: relative symmetrization defect {defect:.3e} exceeds {limit:.1e}")]
    UnreliableAssembly { defect: f64, limit: f64 },

    #[error("eigensolver converged {converged} of {requested} eigenvalues")]
    NotConverged { converged: usize, requested: usize },

    #[error("window too narrow: {0}")]
    WindowTooNarrow(String),

    #[error("ill-conditioned fit basis: condition number {0:.3e}")]
    IllConditioned(f64),

    #[error("z = {z} lies within {distance:.1e} of the pole at {pole}; use the residue instead")]
    PoleProximity { z: String, pole: f64, distance: f64 },

    #[error("quadrature did not reach tolerance: estimated error {error:.3e}, requested {tolerance:.3e}")]
    Quadrature { error: f64, tolerance: f64 },

    #[error("cross-check failed: {0}")]
    CrossCheck(String),

    #[error("kernel dimension is ill-posed: {0} singular values straddle the threshold")]
    IllPosedKernel(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
