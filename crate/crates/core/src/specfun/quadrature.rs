//! Adaptive quadrature rules.
//!
//! Two rule families are provided:
//!
//! - composite Simpson on a closed interval, refined by node doubling;
//! - a double-exponential (exp-sinh) rule on (0, ∞), i.e. the trapezoid rule
//!   applied after the monotone substitution x = exp(π/2 · sinh t). It is
//!   insensitive to algebraic endpoint singularities at 0 and to algebraic
//!   or exponential decay at ∞, which is exactly the integrand class of the
//!   Bessel, Tricomi and Mellin integrals in this crate.
//!
//! Both refine until two successive estimates agree to the requested
//! relative tolerance; running out of nodes is an error.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};

/// Hard cap on quadrature nodes.
pub const MAX_NODES: usize = 1 << 20;

/// Smallest rule a caller may request.
pub const MIN_NODES: usize = 16;

/// Lower and upper truncation of the exp-sinh parameter t.
const EXP_SINH_T_LEFT: f64 = -6.0;
const EXP_SINH_T_RIGHT: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleKind {
    CompositeSimpson,
    ExpSinh,
}

/// A fixed quadrature rule; `upper` may be `f64::INFINITY` for exp-sinh rules.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub kind: RuleKind,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub lower: f64,
    pub upper: f64,
}

impl QuadratureRule {
    /// Composite Simpson on [a, b]; `intervals` is rounded up to an even
    /// number, and at least [`MIN_NODES`] nodes are used.
    pub fn simpson(a: f64, b: f64, intervals: usize) -> Result<Self> {
        if !(b > a) || !a.is_finite() || !b.is_finite() {
            return Err(Error::domain("simpson", format!("bad interval [{a}, {b}]")));
        }
        let mut n = intervals.max(MIN_NODES - 1);
        if n % 2 == 1 {
            n += 1;
        }
        if n + 1 > MAX_NODES {
            return Err(Error::domain("simpson", format!("{} nodes exceed cap", n + 1)));
        }
        let h = (b - a) / n as f64;
        let nodes = (0..=n).map(|i| a + h * i as f64).collect();
        let weights = (0..=n)
            .map(|i| {
                let c = if i == 0 || i == n {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                c * h / 3.0
            })
            .collect();
        Ok(Self {
            kind: RuleKind::CompositeSimpson,
            nodes,
            weights,
            lower: a,
            upper: b,
        })
    }

    /// Exp-sinh rule on (0, ∞) with parameter step `h`.
    pub fn exp_sinh(h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::domain("exp_sinh", "step must be positive"));
        }
        let i_lo = (EXP_SINH_T_LEFT / h).floor() as i64;
        let i_hi = (EXP_SINH_T_RIGHT / h).ceil() as i64;
        let count = (i_hi - i_lo + 1) as usize;
        if count > MAX_NODES {
            return Err(Error::domain("exp_sinh", format!("{count} nodes exceed cap")));
        }
        let mut nodes = Vec::with_capacity(count);
        let mut weights = Vec::with_capacity(count);
        for i in i_lo..=i_hi {
            let (x, w) = exp_sinh_node(i as f64 * h);
            if x > 0.0 && x.is_finite() && w > 0.0 && w.is_finite() {
                nodes.push(x);
                weights.push(w * h);
            }
        }
        Ok(Self {
            kind: RuleKind::ExpSinh,
            nodes,
            weights,
            lower: 0.0,
            upper: f64::INFINITY,
        })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn apply<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        let mut acc = Neumaier::default();
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            acc.add(w * f(x));
        }
        acc.sum()
    }
}

/// An integral estimate with the difference between the last two refinements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub nodes: usize,
}

#[inline]
fn exp_sinh_node(t: f64) -> (f64, f64) {
    let s = FRAC_PI_2 * t.sinh();
    let x = s.exp();
    (x, FRAC_PI_2 * t.cosh() * x)
}

/// Neumaier compensated summation.
#[derive(Debug, Default, Clone, Copy)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn sum(&self) -> f64 {
        self.sum + self.comp
    }
}

fn converged(new: f64, old: f64, rel_tol: f64, abs_floor: f64) -> bool {
    (new - old).abs() <= rel_tol * new.abs().max(abs_floor)
}

/// ∫ₐᵇ f by composite Simpson with node doubling.
pub fn integrate_closed<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> Result<Estimate> {
    if !(b > a) {
        return Err(Error::domain("integrate_closed", format!("bad interval [{a}, {b}]")));
    }
    let mut n = 16usize;
    let h0 = (b - a) / n as f64;
    // Keep odd/even partial sums so each doubling reuses earlier samples.
    let ends = f(a) + f(b);
    let mut interior: f64 = (1..n).map(|i| f(a + h0 * i as f64)).sum();
    let simpson_from = |ends: f64, evens: f64, odds: f64, h: f64| (ends + 2.0 * evens + 4.0 * odds) * h / 3.0;
    // On the first level split interior into even/odd.
    let mut evens: f64 = (1..n).filter(|i| i % 2 == 0).map(|i| f(a + h0 * i as f64)).sum();
    let mut odds = interior - evens;
    let mut prev = simpson_from(ends, evens, odds, h0);
    let mut last_diff = f64::INFINITY;
    while 2 * n < MAX_NODES {
        n *= 2;
        let h = (b - a) / n as f64;
        let new_odds: f64 = (0..n / 2).map(|i| f(a + h * (2 * i + 1) as f64)).sum();
        evens = interior;
        odds = new_odds;
        interior = evens + odds;
        let cur = simpson_from(ends, evens, odds, h);
        if !cur.is_finite() {
            return Err(Error::domain("integrate_closed", "integrand produced a non-finite value"));
        }
        last_diff = (cur - prev).abs();
        if n >= 64 && converged(cur, prev, rel_tol, 1e-300) {
            return Ok(Estimate {
                value: cur,
                error: last_diff,
                nodes: n + 1,
            });
        }
        prev = cur;
    }
    Err(Error::NonConvergence {
        what: "composite Simpson",
        iterations: n + 1,
        partial: prev,
        last_increment: last_diff,
    })
}

/// ∫₀^∞ f by the exp-sinh rule with step halving.
///
/// `abs_floor` guards the relative test for integrals that are exactly or
/// nearly zero. A tail that has not decayed at the truncation points is
/// reported as non-convergence.
pub fn integrate_semi_infinite<F: Fn(f64) -> f64>(f: F, rel_tol: f64, abs_floor: f64) -> Result<Estimate> {
    let eval = |t: f64| -> Result<f64> {
        let (x, w) = exp_sinh_node(t);
        if x == 0.0 || w == 0.0 || !w.is_finite() || !x.is_finite() {
            return Ok(0.0);
        }
        let fx = f(x);
        if fx == 0.0 {
            return Ok(0.0);
        }
        let v = fx * w;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::domain(
                "integrate_semi_infinite",
                format!("integrand not finite at x = {x:e}"),
            ))
        }
    };

    let mut h = 0.5f64;
    let i_lo = (EXP_SINH_T_LEFT / h).floor() as i64;
    let i_hi = (EXP_SINH_T_RIGHT / h).ceil() as i64;
    let mut acc = Neumaier::default();
    let mut nodes = 0usize;
    let mut edge = 0.0f64;
    for i in i_lo..=i_hi {
        let v = eval(i as f64 * h)?;
        if i == i_lo || i == i_hi {
            edge = edge.max(v.abs());
        }
        acc.add(v);
        nodes += 1;
    }
    let mut prev = acc.sum() * h;
    let mut last_diff = f64::INFINITY;
    let mut level = 0;
    loop {
        h *= 0.5;
        level += 1;
        let i_lo = (EXP_SINH_T_LEFT / h).floor() as i64;
        let i_hi = (EXP_SINH_T_RIGHT / h).ceil() as i64;
        if nodes + ((i_hi - i_lo) / 2) as usize > MAX_NODES {
            break;
        }
        // Only odd multiples of the new step are new nodes.
        let mut i = if i_lo % 2 == 0 { i_lo + 1 } else { i_lo };
        while i <= i_hi {
            acc.add(eval(i as f64 * h)?);
            nodes += 1;
            i += 2;
        }
        let cur = acc.sum() * h;
        last_diff = (cur - prev).abs();
        if level >= 3 && converged(cur, prev, rel_tol, abs_floor) {
            if edge > rel_tol * cur.abs().max(abs_floor) {
                return Err(Error::NonConvergence {
                    what: "exp-sinh quadrature (integrand tail not decaying)",
                    iterations: nodes,
                    partial: cur,
                    last_increment: edge,
                });
            }
            return Ok(Estimate {
                value: cur,
                error: last_diff,
                nodes,
            });
        }
        prev = cur;
    }
    Err(Error::NonConvergence {
        what: "exp-sinh quadrature",
        iterations: nodes,
        partial: prev,
        last_increment: last_diff,
    })
}

/// ∫ₐ^∞ f via the shift x = a + y.
pub fn integrate_from<F: Fn(f64) -> f64>(f: F, a: f64, rel_tol: f64, abs_floor: f64) -> Result<Estimate> {
    integrate_semi_infinite(|y| f(a + y), rel_tol, abs_floor)
}
