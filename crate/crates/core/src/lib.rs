//! Painlevé IV Hamiltonian systems built as k-th order SUSY partners of the
//! harmonic oscillator, the Painlevé IV transcendents they carry, and the
//! coherent-state families living in their two invariant subspaces.
//!
//! The crate is organised bottom-up:
//!
//! - [`specfun`]: Γ, Pochhammer, ₁F₁, ₀F₂, K_ν, U(a,1;x) and the quadrature
//!   rules everything else leans on.
//! - [`grid`]: uniform grids, composite Simpson and 5-point stencils.
//! - [`susy`]: seed chains, Wronskians, the partner potential and the
//!   eigenfunctions of both ladders.
//! - [`painleve`]: extraction of g(x) from an extremal state and the ODE
//!   residual checks.
//! - [`ladder`]: third-order ladder operators as coefficient tables and as
//!   differential operators rebuilt from g(x).
//! - [`coherent`]: the four coherent-state families, their kernels,
//!   measures, energies and time evolution.
//! - [`document`] and [`verify`]: JSON/CSV artifacts and the invariant
//!   suites surfaced by the CLI.

pub(crate) mod dd;
pub mod coherent;
pub mod document;
pub mod error;
pub mod grid;
pub mod ladder;
pub mod painleve;
pub mod specfun;
pub mod susy;
pub mod verify;

pub use error::{Error, Result};
pub use coherent::{CoherentState, Family, Label, MeasureFamily, MeasureFn};
pub use grid::Grid;
pub use painleve::{Assignment, PainleveSolution};
pub use susy::{SeedFamily, SusySystem, SystemSpec};

/// Ground energy E₀ of the harmonic oscillator in units ħ = ω = m = 1.
pub const E0: f64 = 0.5;
