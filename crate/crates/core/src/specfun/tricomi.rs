use super::gamma::gamma;
use super::quadrature::integrate_semi_infinite;
use crate::error::{Error, Result};

/// Tricomi's confluent hypergeometric function U(a, 1; x) for a, x > 0,
///
/// U(a, 1; x) = 1/Γ(a) · ∫₀^∞ e^{−xt} t^{a−1} (1+t)^{−a} dt
///          = 1/Γ(a) · ∫₀^∞ e^{−τ} τ^{a−1} (x+τ)^{−a} dτ.
///
/// The second form is used: its mass stays at τ = O(1) as x → 0.
pub fn tricomi_u(a: f64, x: f64) -> Result<f64> {
    tricomi_u_tol(a, x, 1e-10)
}

pub fn tricomi_u_tol(a: f64, x: f64, tol: f64) -> Result<f64> {
    if !(a > 0.0) || !(x > 0.0) || !a.is_finite() || !x.is_finite() {
        return Err(Error::domain("tricomi_u", format!("need a > 0 and x > 0, got a = {a}, x = {x}")));
    }
    let integral = integrate_semi_infinite(
        |t| ((a - 1.0) * t.ln() - a * (x + t).ln() - t).exp(),
        tol,
        0.0,
    )?;
    Ok(integral.value / gamma(a)?)
}
