use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};

use super::SystemSpec;
use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::specfun::{gamma, MAX_TERMS};

/// ₁F₁(a; c; y) and its y-derivative in double-double, y ≥ 0, a > 0.
fn hyp1f1_pair_dd(a: Dd, c: f64, y: Dd) -> Result<(Dd, Dd)> {
    // F′ = (a/c) ₁F₁(a+1; c+1; y)
    let series = |a: Dd, c: f64| -> Result<Dd> {
        let mut sum = Dd::ONE;
        let mut term = Dd::ONE;
        let mut quiet = 0;
        for n in 0..MAX_TERMS {
            let nf = n as f64;
            term = term * (a.add_f64(nf) * y) / Dd::new((c + nf) * (nf + 1.0));
            sum = sum + term;
            if !sum.is_finite() {
                break;
            }
            if term.hi.abs() <= 1e-33 * sum.hi.abs() {
                quiet += 1;
                if quiet >= 8 {
                    return Ok(sum);
                }
            } else {
                quiet = 0;
            }
        }
        Err(Error::NonConvergence {
            what: "seed ₁F₁ series",
            iterations: MAX_TERMS,
            partial: sum.to_f64(),
            last_increment: term.to_f64(),
        })
    };
    let f = series(a, c)?;
    let df = (a / Dd::new(c)) * series(a.add_f64(1.0), c + 1.0)?;
    Ok((f, df))
}

fn check_poles(eps: f64) -> Result<(f64, f64)> {
    let a_even = (1.0 - 2.0 * eps) / 4.0;
    let a_odd = (3.0 - 2.0 * eps) / 4.0;
    for a in [a_even, a_odd] {
        if a <= 0.0 && a == a.floor() {
            return Err(Error::domain(
                "seed_solution",
                format!("ε = {eps} puts the mixing coefficient on a Γ pole"),
            ));
        }
    }
    Ok((a_even, a_odd))
}

/// Seed pair in double-double. The ₁F₁ parameters are formed from `eps`
/// without rounding so (u, u′) solves u″ = (x² − 2ε)u for exactly this ε.
pub(crate) fn seed_solution_dd(x: f64, eps: Dd, nu: f64) -> Result<(Dd, Dd)> {
    let (a_even, a_odd) = check_poles(eps.to_f64())?;
    if a_even <= 0.0 {
        return Err(Error::domain("seed_solution", format!("ε = {} ≥ 1/2 is outside the seed range", eps.to_f64())));
    }
    // Any mixing weight gives an exact solution; it only fixes ν.
    let mix = 2.0 * nu * gamma(a_odd)? / gamma(a_even)?;
    let one_minus_2eps = Dd::ONE - eps.mul_f64(2.0);
    let ae = one_minus_2eps.mul_f64(0.25);
    let ao = one_minus_2eps.add_f64(2.0).mul_f64(0.25);
    let y = Dd::new(x) * Dd::new(x);
    let (fe, dfe) = hyp1f1_pair_dd(ae, 0.5, y)?;
    let (fo, dfo) = hyp1f1_pair_dd(ao, 1.5, y)?;
    let bracket = fe + fo.mul_f64(x).mul_f64(mix);
    let dbracket = dfe.mul_f64(2.0 * x) + (fo + (y * dfo).mul_f64(2.0)).mul_f64(mix);
    let gauss = (-0.5 * x * x).exp();
    let u = bracket.mul_f64(gauss);
    let du = (dbracket - bracket.mul_f64(x)).mul_f64(gauss);
    Ok((u, du))
}

/// General solution u(x, ε) of −½u″ + ½x²u = εu with u(0) = 1 and the
/// odd component weighted by ν, together with its analytic derivative.
pub fn seed_solution(x: f64, eps: f64, nu: f64) -> Result<(f64, f64)> {
    check_poles(eps)?;
    let (u, du) = seed_solution_dd(x, Dd::new(eps), nu)?;
    Ok((u.to_f64(), du.to_f64()))
}

/// Applies a⁻ = (d/dx + x)/√2 to a solution at energy `eps`; the image
/// solves the same equation at `eps − 1`.
#[inline]
pub fn lower(x: f64, eps: f64, u: f64, du: f64) -> (f64, f64) {
    let w = (du + x * u) * FRAC_1_SQRT_2;
    let dw = ((x * x - 2.0 * eps + 1.0) * u + x * du) * FRAC_1_SQRT_2;
    (w, dw)
}

/// [`lower`] in double-double. The 1/√2 is dropped: a constant factor per
/// seed rescales W but not V_k or any normalized state.
#[inline]
fn lower_dd(x: f64, eps: Dd, u: Dd, du: Dd) -> (Dd, Dd) {
    let w = du + u.mul_f64(x);
    let coeff = (Dd::new(x) * Dd::new(x) - eps.mul_f64(2.0)).add_f64(1.0);
    let dw = coeff * u + du.mul_f64(x);
    (w, dw)
}

/// The k transformation functions fixed by the top seed through a⁻.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedFamily {
    pub nu: f64,
    pub eps_top: f64,
    /// ε₀ < ε₁ < … < ε_{k−1}.
    pub energies: Vec<f64>,
    pub grid: Grid,
    /// `values[j]` samples u_j = u(·, ε_j) on the grid (leading part).
    pub values: Vec<Vec<f64>>,
    pub derivs: Vec<Vec<f64>>,
    /// Trailing double-double parts of `values` and `derivs`.
    pub values_lo: Vec<Vec<f64>>,
    pub derivs_lo: Vec<Vec<f64>>,
}

impl SeedFamily {
    pub fn k(&self) -> usize {
        self.energies.len()
    }

    /// ε_j exactly as ε_{k−1} − (k−1−j).
    pub(crate) fn energy_dd(&self, j: usize) -> Dd {
        Dd::new(self.eps_top).add_f64(-((self.k() - 1 - j) as f64))
    }

    pub(crate) fn pair_dd(&self, j: usize, i: usize) -> (Dd, Dd) {
        (
            Dd {
                hi: self.values[j][i],
                lo: self.values_lo[j][i],
            },
            Dd {
                hi: self.derivs[j][i],
                lo: self.derivs_lo[j][i],
            },
        )
    }

    /// (u_j, u_j′) for every seed at an arbitrary point.
    pub fn at(&self, x: f64) -> Result<Vec<(f64, f64)>> {
        Ok(self
            .at_dd(x)?
            .into_iter()
            .map(|(u, du)| (u.to_f64(), du.to_f64()))
            .collect())
    }

    pub(crate) fn at_dd(&self, x: f64) -> Result<Vec<(Dd, Dd)>> {
        chain_at_dd(x, self.eps_top, self.k(), self.nu)
    }
}

fn chain_at_dd(x: f64, eps_top: f64, k: usize, nu: f64) -> Result<Vec<(Dd, Dd)>> {
    let mut out = vec![(Dd::ZERO, Dd::ZERO); k];
    let top = Dd::new(eps_top);
    let (mut u, mut du) = seed_solution_dd(x, top, nu)?;
    out[k - 1] = (u, du);
    for j in (0..k - 1).rev() {
        let parent = top.add_f64(-((k - 2 - j) as f64));
        (u, du) = lower_dd(x, parent, u, du);
        out[j] = (u, du);
    }
    Ok(out)
}

/// Builds u_{k−1} from the closed form and the rest of the chain by
/// repeated a⁻, checking that u_{k−1} keeps one sign on the grid.
pub fn build_seed_chain(spec: &SystemSpec) -> Result<SeedFamily> {
    spec.validate()?;
    let energies = spec.energies();
    let k = energies.len();
    let xs = spec.grid.points();
    let n = xs.len();
    let mut values = vec![Vec::with_capacity(n); k];
    let mut derivs = vec![Vec::with_capacity(n); k];
    let mut values_lo = vec![Vec::with_capacity(n); k];
    let mut derivs_lo = vec![Vec::with_capacity(n); k];
    for &x in &xs {
        for (j, (u, du)) in chain_at_dd(x, spec.eps_top, k, spec.nu)?.into_iter().enumerate() {
            if !u.is_finite() || !du.is_finite() {
                return Err(Error::Construction {
                    stage: "seed chain",
                    detail: format!("seed {j} not finite at x = {x}"),
                });
            }
            values[j].push(u.hi);
            values_lo[j].push(u.lo);
            derivs[j].push(du.hi);
            derivs_lo[j].push(du.lo);
        }
    }
    let top = &values[k - 1];
    if let Some(i) = (0..top.len()).find(|&i| top[i] == 0.0 || (i > 0 && top[i].signum() != top[i - 1].signum())) {
        return Err(Error::InvalidSpec(format!(
            "top seed u(x, ε_{}) has a node near x = {}",
            k - 1,
            xs[i]
        )));
    }
    Ok(SeedFamily {
        nu: spec.nu,
        eps_top: spec.eps_top,
        energies,
        grid: spec.grid,
        values,
        derivs,
        values_lo,
        derivs_lo,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Oracle: Taylor series of u″ = (x² − 2ε)u about 0 with
    /// u(0) = 1, u′(0) = 2νΓ((3−2ε)/4)/Γ((1−2ε)/4).
    fn taylor_oracle(x: f64, eps: f64, nu: f64) -> (f64, f64) {
        let d0 = 2.0 * nu * gamma((3.0 - 2.0 * eps) / 4.0).unwrap() / gamma((1.0 - 2.0 * eps) / 4.0).unwrap();
        let n = 120;
        let mut c = vec![0.0f64; n + 3];
        c[0] = 1.0;
        c[1] = d0;
        for m in 0..n {
            let prev = if m >= 2 { c[m - 2] } else { 0.0 };
            c[m + 2] = (prev - 2.0 * eps * c[m]) / ((m + 2) as f64 * (m + 1) as f64);
        }
        let u: f64 = c.iter().enumerate().map(|(m, a)| a * x.powi(m as i32)).sum();
        let du: f64 = c.iter().enumerate().skip(1).map(|(m, a)| m as f64 * a * x.powi(m as i32 - 1)).sum();
        (u, du)
    }

    #[test]
    fn unit_value_at_origin() {
        let (u, _) = seed_solution(0.0, -1.3, 0.7).unwrap();
        assert_eq!(u, 1.0);
    }

    #[test]
    fn even_when_nu_vanishes() {
        for &x in &[0.3, 1.7, 4.2, 7.9] {
            let (a, da) = seed_solution(x, -0.5, 0.0).unwrap();
            let (b, db) = seed_solution(-x, -0.5, 0.0).unwrap();
            assert_eq!(a, b);
            assert_eq!(da, -db);
        }
    }

    #[test]
    fn matches_taylor_integration() {
        let (u, du) = seed_solution(1.0, -2.8, -0.9).unwrap();
        let (uo, duo) = taylor_oracle(1.0, -2.8, -0.9);
        assert!((u - uo).abs() < 1e-12 * uo.abs(), "{u} vs {uo}");
        assert!((du - duo).abs() < 1e-11 * duo.abs(), "{du} vs {duo}");
        // 40-digit reference: 0.63584473491677299500…, 1.18638345097771983609…
        assert!((u - 0.635_844_734_916_773).abs() < 1e-13);
        assert!((du - 1.186_383_450_977_719_8).abs() < 1e-12);
    }

    #[test]
    fn lowering_preserves_schrodinger_equation() {
        // For the lowered pair the second derivative from the equation must
        // match a centred difference of the analytic first derivative.
        let eps = -1.4;
        let nu = 0.35;
        for &x in &[-3.0, -0.4, 0.9, 2.5] {
            let h = 1e-5;
            let (u_m, du_m) = seed_solution(x - h, eps, nu).unwrap();
            let (u_p, du_p) = seed_solution(x + h, eps, nu).unwrap();
            let (_, dw_m) = lower(x - h, eps, u_m, du_m);
            let (_, dw_p) = lower(x + h, eps, u_p, du_p);
            let (u, du) = seed_solution(x, eps, nu).unwrap();
            let (w, _) = lower(x, eps, u, du);
            let fd = (dw_p - dw_m) / (2.0 * h);
            let exact = (x * x - 2.0 * (eps - 1.0)) * w;
            assert!((fd - exact).abs() < 1e-6 * exact.abs().max(1.0), "x={x}");
        }
    }

    #[test]
    fn pole_energies_rejected() {
        assert!(seed_solution(0.2, 0.5, 0.1).is_err());
        assert!(seed_solution(0.2, 1.5, 0.1).is_err());
    }
}
