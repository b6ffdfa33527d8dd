use std::f64::consts::PI;

use super::gamma::ln_gamma;
use super::quadrature::integrate_semi_infinite;
use crate::error::{Error, Result};

/// Relative tolerance of the inner quadrature used by [`bessel_k`].
pub const DEFAULT_TOL: f64 = 1e-11;

/// Modified Bessel function of the third kind K_ν(z), z > 0.
///
/// Evaluated from
///
/// K_ν(z) = √π / Γ(ν+½) · (z/2)^ν · ∫₁^∞ e^{−zp} (p²−1)^{ν−½} dp,  ν > −½,
///
/// with K_ν = K_{−ν} covering the remaining orders.
pub fn bessel_k(nu: f64, z: f64) -> Result<f64> {
    bessel_k_tol(nu, z, DEFAULT_TOL)
}

pub fn bessel_k_tol(nu: f64, z: f64, tol: f64) -> Result<f64> {
    Ok(ln_bessel_k_tol(nu, z, tol)?.exp())
}

/// ln K_ν(z), finite where K_ν itself over- or underflows.
///
/// With p = 1 + t/z the integral becomes
/// z^{−2ν} e^{−z} ∫₀^∞ (t(2z+t))^{ν−½} e^{−t} dt, whose mass sits at
/// t = O(1 + ν) for every z.
pub fn ln_bessel_k_tol(nu: f64, z: f64, tol: f64) -> Result<f64> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::domain("bessel_k", format!("argument z = {z} must be positive")));
    }
    if !nu.is_finite() {
        return Err(Error::domain("bessel_k", "order must be finite"));
    }
    let nu = nu.abs();
    let e = nu - 0.5;
    let integral = integrate_semi_infinite(|t| (e * (t * (2.0 * z + t)).ln() - t).exp(), tol, 0.0)?;
    Ok(0.5 * PI.ln() - ln_gamma(nu + 0.5)? + nu * (0.5 * z).ln() - 2.0 * nu * z.ln() - z
        + integral.value.ln())
}
