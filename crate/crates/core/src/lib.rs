//! Numerical spectral geometry for hypoelliptic operators.
//!
//! The crate covers the whole pipeline from graded nilpotent Lie algebras to
//! spectral invariants:
//!
//! * [`carnot`]: structure constants, dilations and the exact group law for
//!   step at most three.
//! * [`ops`]: left-invariant homogeneous differential operators as words in
//!   the enveloping algebra, with composition, formal adjoints and
//!   Rumin–Seshadri assembly.
//! * [`nilmanifold`]: finite-difference discretization on flat tori and on the
//!   Heisenberg nilmanifold (fibered over center frequencies).
//! * [`spectral`]: eigenvalues, counting functions and Weyl-law fits.
//! * [`asymptotics`]: heat traces, heat coefficient fits, spectral zeta
//!   functions, residues and the McKean–Singer supertrace.
//! * [`plancherel`]: group heat kernels at the origin from representation
//!   theory, including the Weyl constant of the (2,3,5) Carnot group.
//!
//! Inner loops (fibers, quadrature nodes, batches of times or arguments) run
//! through [`par`], which uses rayon when the `parallel` feature is enabled
//! and falls back to plain iteration otherwise. Results are identical either
//! way: reductions always happen in a fixed order.

pub mod asymptotics;
pub mod carnot;
pub mod error;
pub mod linalg;
pub mod nilmanifold;
pub mod ops;
pub mod par;
pub mod plancherel;
pub mod quad;
pub mod special;
pub mod spectral;

pub use error::{Error, Result};

/// Crate version, recorded in run reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
