//! Special functions and quadrature.
//!
//! All routines are pure functions of their arguments.

mod bessel;
mod gamma;
mod hypergeometric;
mod mellin;
pub mod quadrature;
mod tricomi;

pub use bessel::{bessel_k, bessel_k_tol, ln_bessel_k_tol};
pub use gamma::{gamma, ln_gamma, pochhammer};
pub use hypergeometric::{hyp0f2, hyp1f1, hyp1f1_deriv, MAX_TERMS};
pub use mellin::mellin_moment;
pub use quadrature::{Estimate, QuadratureRule, RuleKind};
pub use tricomi::{tricomi_u, tricomi_u_tol};
