//! Wronskians of Schrödinger solutions with every derivative row reduced
//! through f″ = (x² − 2E) f, so no numerical differentiation enters.
//! Evaluation is carried in double-double.

use crate::dd::{self, Dd};
use crate::error::{Error, Result};

/// Polynomials (P_m, Q_m) with f^{(m)} = P_m(x) f + Q_m(x) f′ for any
/// solution of f″ = (x² − 2E) f.
#[derive(Debug, Clone)]
pub struct DerivativeRule {
    p: Vec<Vec<Dd>>,
    q: Vec<Vec<Dd>>,
}

fn poly_deriv(c: &[Dd]) -> Vec<Dd> {
    if c.len() <= 1 {
        return vec![Dd::ZERO];
    }
    c.iter().enumerate().skip(1).map(|(i, a)| a.mul_f64(i as f64)).collect()
}

fn poly_add(a: &[Dd], b: &[Dd]) -> Vec<Dd> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|i| a.get(i).copied().unwrap_or(Dd::ZERO) + b.get(i).copied().unwrap_or(Dd::ZERO))
        .collect()
}

/// Multiplies by (x² − 2E).
fn poly_mul_potential(a: &[Dd], energy: Dd) -> Vec<Dd> {
    let mut out = vec![Dd::ZERO; a.len() + 2];
    let two_e = energy.mul_f64(2.0);
    for (i, &c) in a.iter().enumerate() {
        out[i + 2] = out[i + 2] + c;
        out[i] = out[i] - two_e * c;
    }
    out
}

fn poly_eval(c: &[Dd], x: f64) -> Dd {
    c.iter().rev().fold(Dd::ZERO, |acc, &a| acc.mul_f64(x) + a)
}

impl DerivativeRule {
    pub fn new(energy: f64, max_order: usize) -> Self {
        Self::new_dd(Dd::new(energy), max_order)
    }

    pub(crate) fn new_dd(energy: Dd, max_order: usize) -> Self {
        let mut p = vec![vec![Dd::ONE]];
        let mut q = vec![vec![Dd::ZERO]];
        for m in 0..max_order {
            let next_p = poly_add(&poly_deriv(&p[m]), &poly_mul_potential(&q[m], energy));
            let next_q = poly_add(&p[m], &poly_deriv(&q[m]));
            p.push(next_p);
            q.push(next_q);
        }
        Self { p, q }
    }

    pub fn max_order(&self) -> usize {
        self.p.len() - 1
    }

    /// f^{(order)}(x) from f(x) and f′(x).
    pub fn apply(&self, order: usize, x: f64, f: f64, df: f64) -> f64 {
        self.apply_dd(order, x, Dd::new(f), Dd::new(df)).to_f64()
    }

    #[inline]
    pub(crate) fn apply_dd(&self, order: usize, x: f64, f: Dd, df: Dd) -> Dd {
        poly_eval(&self.p[order], x) * f + poly_eval(&self.q[order], x) * df
    }
}

/// One column of a Wronskian: a solution sampled at a point.
#[derive(Debug, Clone, Copy)]
pub struct Column<'a> {
    pub rule: &'a DerivativeRule,
    pub value: Dd,
    pub deriv: Dd,
}

impl<'a> Column<'a> {
    pub fn new(rule: &'a DerivativeRule, value: f64, deriv: f64) -> Self {
        Self {
            rule,
            value: Dd::new(value),
            deriv: Dd::new(deriv),
        }
    }
}

pub(crate) fn derivative_det_dd(x: f64, columns: &[Column<'_>], orders: &[usize]) -> Dd {
    let n = columns.len();
    assert_eq!(n, orders.len());
    if n == 0 {
        return Dd::ONE;
    }
    let mut m = vec![Dd::ZERO; n * n];
    for (r, &ord) in orders.iter().enumerate() {
        for (c, col) in columns.iter().enumerate() {
            m[r * n + c] = col.rule.apply_dd(ord, x, col.value, col.deriv);
        }
    }
    dd::determinant(&mut m, n)
}

/// det of the matrix M[r][c] = d^{orders[r]} column_c at x.
pub fn derivative_det(x: f64, columns: &[Column<'_>], orders: &[usize]) -> f64 {
    derivative_det_dd(x, columns, orders).to_f64()
}

/// Determinant by Gaussian elimination with partial pivoting (destroys `m`).
pub fn determinant(m: &mut [f64], n: usize) -> f64 {
    let mut det = 1.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&a, &b| m[a * n + col].abs().total_cmp(&m[b * n + col].abs()))
            .unwrap();
        let pv = m[pivot * n + col];
        if pv == 0.0 {
            return 0.0;
        }
        if pivot != col {
            for c in 0..n {
                m.swap(pivot * n + c, col * n + c);
            }
            det = -det;
        }
        det *= pv;
        for r in col + 1..n {
            let factor = m[r * n + col] / pv;
            if factor != 0.0 {
                for c in col..n {
                    m[r * n + c] -= factor * m[col * n + c];
                }
            }
        }
    }
    det
}

pub(crate) fn wronskian_with_derivatives_dd(x: f64, columns: &[Column<'_>]) -> (Dd, Dd, Dd) {
    let k = columns.len();
    if k == 0 {
        return (Dd::ONE, Dd::ZERO, Dd::ZERO);
    }
    let rows: Vec<usize> = (0..k).collect();
    let w = derivative_det_dd(x, columns, &rows);
    let mut r1 = rows.clone();
    r1[k - 1] = k;
    let w1 = derivative_det_dd(x, columns, &r1);
    let mut r2 = r1.clone();
    r2[k - 1] = k + 1;
    let mut w2 = derivative_det_dd(x, columns, &r2);
    if k >= 2 {
        let mut r3 = r1.clone();
        r3[k - 2] = k - 1;
        w2 = w2 + derivative_det_dd(x, columns, &r3);
    }
    (w, w1, w2)
}

/// W, W′ and W″ of the given columns at x.
///
/// W′ replaces the last row by the next derivative; W″ adds the term where
/// the second-to-last row is advanced instead.
pub fn wronskian_with_derivatives(x: f64, columns: &[Column<'_>]) -> (f64, f64, f64) {
    let (w, w1, w2) = wronskian_with_derivatives_dd(x, columns);
    (w.to_f64(), w1.to_f64(), w2.to_f64())
}

/// Checks that sampled W keeps one sign and is bounded away from zero.
pub fn check_nodeless(xs: &[f64], w: &[f64]) -> Result<()> {
    for i in 0..w.len() {
        if !w[i].is_finite() || w[i].abs() < 1e-300 || (i > 0 && w[i].signum() != w[i - 1].signum()) {
            return Err(Error::SingularPotential { x: xs[i] });
        }
    }
    Ok(())
}
