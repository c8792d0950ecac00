//! Heat kernel at the origin of the (2,3,5) Carnot group through the
//! Plancherel formula.
//!
//! Generic representations are indexed by `(λ, μ, ν)` and act on `L²(ℝ)`,
//! where the sub-Laplacian becomes the quartic oscillator
//! `H = -(1/m) d²/dθ² + (m²θ² + ν)²/(4m)`, `m = λ² + μ²`. The heat kernel at
//! the origin is `∫ tr e^{-tH} dλ dμ dν`, and the Weyl constant is
//! `α₀ = k_1(o)/5!`.
//!
//! Substituting `θ = m^{-2/3} φ` gives `H = m^{1/3} K(ν m^{-2/3})` with
//! `K(b) = -d²/dφ² + (φ² + b)²/4`, which collapses the `(μ, ν)` integral to
//! `k_t(o) = 72π t^{-5} ∫ Σ_k e_k(b)^{-5} db`.

mod oscillator;
mod quadrature;

pub use oscillator::{levels, lowest_levels, EvenOscillator, Levels, OscillatorDiscretization};
pub use quadrature::{
    alpha0_estimate, group_heat_origin, group_heat_origin_reduced, heisenberg_group_oracle, oscillator_trace,
    quartic_trace, reduced_moment, Alpha0Report, CrossCheck, HeisenbergOracle, PlancherelQuadrature,
    PlancherelValue, QuarticHamiltonian, TraceValue, ALPHA0_CONVENTION, TRACE_TOL,
};
