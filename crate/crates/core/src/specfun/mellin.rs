use super::quadrature::{integrate_semi_infinite, Estimate};
use crate::error::Result;

/// ∫₀^∞ x^{s−1} f(x) dx by the exp-sinh rule.
///
/// The returned estimate carries the last refinement difference as its
/// error. A tail that has not decayed is reported as non-convergence.
pub fn mellin_moment<F: Fn(f64) -> f64>(f: F, s: f64, rel_tol: f64) -> Result<Estimate> {
    integrate_semi_infinite(
        |x| {
            let fx = f(x);
            if fx == 0.0 {
                0.0
            } else {
                ((s - 1.0) * x.ln()).exp() * fx
            }
        },
        rel_tol,
        0.0,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::specfun::gamma;

    #[test]
    fn exponential_moments() {
        for s in 1..=5 {
            let est = mellin_moment(|x| (-x).exp(), s as f64, 1e-12).unwrap();
            let g = gamma(s as f64).unwrap();
            assert!((est.value - g).abs() / g < 1e-8);
            assert!(est.error <= 1e-6 * g);
        }
        assert!((mellin_moment(|x| (-x).exp(), 3.0, 1e-12).unwrap().value - 2.0).abs() < 1e-10);
    }

    #[test]
    fn outside_strip_is_detected() {
        // x^{s-1}/(1+x)² diverges at infinity for s = 2.5.
        let err = mellin_moment(|x| (1.0 + x).powi(-2), 2.5, 1e-8).unwrap_err();
        assert!(matches!(err, Error::NonConvergence { .. }));
    }
}
