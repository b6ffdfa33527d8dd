//! Power series for ₁F₁ and ₀F₂ with real parameters and non-negative argument.
//!
//! Terms are generated from the ratio of consecutive terms, never from
//! per-term Γ calls, and accumulated with compensated summation.

use super::quadrature::Neumaier;
use crate::error::{Error, Result};

/// Series iteration cap.
pub const MAX_TERMS: usize = 100_000;

/// A term is negligible below this fraction of the running sum.
const NEGLIGIBLE: f64 = 1e-16;

/// Number of consecutive negligible terms required to stop.
const QUIET_RUN: usize = 50;

/// Sums t₀ = 1, tₙ₊₁ = tₙ · ratio(n).
fn sum_series<R: Fn(usize) -> f64>(what: &'static str, ratio: R) -> Result<f64> {
    let mut acc = Neumaier::default();
    let mut term = 1.0f64;
    acc.add(term);
    let mut quiet = 0usize;
    for n in 0..MAX_TERMS {
        term *= ratio(n);
        if !term.is_finite() {
            return Err(Error::NonConvergence {
                what,
                iterations: n + 1,
                partial: acc.sum(),
                last_increment: term,
            });
        }
        acc.add(term);
        let s = acc.sum();
        if term.abs() <= NEGLIGIBLE * s.abs() {
            quiet += 1;
            if quiet >= QUIET_RUN {
                return Ok(s);
            }
        } else {
            quiet = 0;
        }
    }
    Err(Error::NonConvergence {
        what,
        iterations: MAX_TERMS,
        partial: acc.sum(),
        last_increment: term,
    })
}

fn is_nonpositive_integer(c: f64) -> bool {
    c <= 0.0 && c == c.floor()
}

/// Kummer's confluent hypergeometric function ₁F₁(a; c; x) for x ≥ 0.
pub fn hyp1f1(a: f64, c: f64, x: f64) -> Result<f64> {
    if is_nonpositive_integer(c) {
        return Err(Error::domain("hyp1f1", format!("c = {c} is a non-positive integer")));
    }
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::domain("hyp1f1", format!("argument x = {x} must be finite and ≥ 0")));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    sum_series("hyp1f1 series", |n| {
        let n = n as f64;
        (a + n) / ((c + n) * (n + 1.0)) * x
    })
}

/// d/dx ₁F₁(a; c; x) = (a/c) ₁F₁(a+1; c+1; x).
pub fn hyp1f1_deriv(a: f64, c: f64, x: f64) -> Result<f64> {
    if a == 0.0 {
        return Ok(0.0);
    }
    Ok(a / c * hyp1f1(a + 1.0, c + 1.0, x)?)
}

/// ₀F₂(; b₁, b₂; x) for x ≥ 0.
pub fn hyp0f2(b1: f64, b2: f64, x: f64) -> Result<f64> {
    if is_nonpositive_integer(b1) || is_nonpositive_integer(b2) {
        return Err(Error::domain("hyp0f2", format!("lower parameters ({b1}, {b2}) hit a pole")));
    }
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::domain("hyp0f2", format!("argument x = {x} must be finite and ≥ 0")));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    sum_series("hyp0f2 series", |n| {
        let n = n as f64;
        x / ((b1 + n) * (b2 + n) * (n + 1.0))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn hyp1f1_trivial_values() {
        assert_eq!(hyp1f1(0.3, 1.7, 0.0).unwrap(), 1.0);
        assert!(rel(hyp1f1(1.0, 1.0, 2.0).unwrap(), 2f64.exp()) < 1e-14);
    }

    #[test]
    fn hyp1f1_negative_a() {
        // Reference: 40-digit evaluation, -8.366976615917357480746598…
        let v = hyp1f1(-0.25, 0.5, 4.0).unwrap();
        assert!(rel(v, -8.366_976_615_917_357) < 1e-12, "{v}");
    }

    #[test]
    fn hyp1f1_large_argument() {
        // ₁F₁(a; a; x) = eˣ at the top of the grid range x = 64.
        assert!(rel(hyp1f1(3.15, 3.15, 64.0).unwrap(), 64f64.exp()) < 1e-12);
        // ₁F₁(1; 2; x) = (eˣ − 1)/x
        assert!(rel(hyp1f1(1.0, 2.0, 70.0).unwrap(), (70f64.exp() - 1.0) / 70.0) < 1e-10);
    }

    #[test]
    fn hyp1f1_pole_is_domain_error() {
        assert!(matches!(hyp1f1(1.0, -2.0, 1.0), Err(Error::Domain { .. })));
        assert!(matches!(hyp1f1(1.0, 0.5, -1.0), Err(Error::Domain { .. })));
    }

    #[test]
    fn hyp0f2_values() {
        assert_eq!(hyp0f2(2.0, 3.0, 0.0).unwrap(), 1.0);
        // Oracle: direct 50-term sum of 1/(n!)^3.
        let mut oracle = 0.0;
        let mut fact = 1.0f64;
        for n in 0..50 {
            if n > 0 {
                fact *= n as f64;
            }
            oracle += 1.0 / (fact * fact * fact);
        }
        assert!(rel(hyp0f2(1.0, 1.0, 1.0).unwrap(), oracle) < 1e-14);
        assert!(rel(oracle, 2.129_702_548_983_306_4) < 1e-15);

        // Same oracle structure for the k=4 acceptance parameters.
        let (b1, b2, x) = (6.3, 2.3, 2.25);
        let mut oracle = 0.0;
        let mut term = 1.0;
        for n in 0..50 {
            oracle += term;
            let nf = n as f64;
            term *= x / ((b1 + nf) * (b2 + nf) * (nf + 1.0));
        }
        let v = hyp0f2(b1, b2, x).unwrap();
        assert!(rel(v, oracle) < 1e-14);
        assert!(rel(v, 1.162_685_173_537_873) < 1e-14);
    }

    proptest! {
        #[test]
        fn derivative_identity(a in -2.0f64..4.0, c in 0.3f64..3.0, x in 0.1f64..30.0) {
            let h = 1e-5 * x.max(1.0);
            let fd = (hyp1f1(a, c, x + h).unwrap() - hyp1f1(a, c, x - h).unwrap()) / (2.0 * h);
            let exact = hyp1f1_deriv(a, c, x).unwrap();
            let scale = exact.abs().max(hyp1f1(a, c, x).unwrap().abs());
            prop_assert!((fd - exact).abs() <= 1e-6 * scale, "fd={} exact={}", fd, exact);
        }

        #[test]
        fn hyp0f2_partial_sums_monotone(b1 in 0.2f64..8.0, b2 in 0.2f64..8.0, x in 0.0f64..50.0) {
            let v = hyp0f2(b1, b2, x).unwrap();
            prop_assert!(v >= 1.0);
            prop_assert!(hyp0f2(b1, b2, x * 1.1 + 0.01).unwrap() > v);
        }
    }
}
