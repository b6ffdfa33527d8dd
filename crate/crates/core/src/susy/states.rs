//! Eigenfunctions of H_k: the transformed oscillator ladder (Crum map) and the
//! k new levels (omitted-seed Wronskian ratios).

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::seed::SeedFamily;
use super::wronskian::{derivative_det_dd, Column, DerivativeRule};
use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::grid::{self, Grid};

/// Relative H-residual above which a constructed new level is rejected.
pub const NEW_STATE_RESIDUAL_TOL: f64 = 1e-4;

/// Allowed gap between the analytic Crum normalization and grid quadrature.
pub const CRUM_NORM_TOL: f64 = 1e-6;

/// Oscillator mass outside the grid above which the Crum norm check is
/// skipped for that level.
pub const CRUM_CHECK_MAX_LEAK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "ladder", content = "index", rename_all = "snake_case")]
pub enum Level {
    Iso(usize),
    New(usize),
}

/// A normalized eigenfunction sampled on the system grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub level: Level,
    pub energy: f64,
    pub values: Vec<f64>,
    /// Analytic first derivative, same normalization as `values`.
    pub derivs: Vec<f64>,
    /// Relative Hamiltonian residual on interior points.
    pub residual: f64,
}

/// Normalized Hermite function ψ_n(x) and its derivative.
pub fn oscillator_pair(n: usize, x: f64) -> (f64, f64) {
    let mut prev = 0.0;
    let mut cur = PI.powf(-0.25) * (-0.5 * x * x).exp();
    for m in 0..n {
        let m = m as f64;
        let next = (2.0 / (m + 1.0)).sqrt() * x * cur - (m / (m + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    // a⁻ψ_n = √n ψ_{n−1}  ⇒  ψ_n′ = √(2n) ψ_{n−1} − x ψ_n
    let d = (2.0 * n as f64).sqrt() * prev - x * cur;
    (cur, d)
}

pub fn oscillator_eigenstate(n: usize, x: f64) -> f64 {
    oscillator_pair(n, x).0
}

/// ‖−½φ″ + Vφ − Eφ‖ / ‖φ‖ over interior points, φ″ by the 5-point stencil.
pub fn hamiltonian_residual(grid: &Grid, potential: &[f64], energy: f64, values: &[f64]) -> f64 {
    let h = grid.step();
    let dd = grid::d2(values, h);
    let band = grid::STENCIL_HALF_WIDTH;
    let n = values.len();
    let mut num = 0.0;
    let mut den = 0.0;
    for i in band..n - band {
        let r = -0.5 * dd[i] + (potential[i] - energy) * values[i];
        num += r * r;
        den += values[i] * values[i];
    }
    (num / den).sqrt()
}

/// Scales `values` (and `derivs`) to unit grid norm, positive at the leftmost
/// maximum of |φ|. Returns the norm before scaling.
pub(crate) fn normalize_with_sign(grid: &Grid, values: &mut [f64], derivs: &mut [f64]) -> f64 {
    let norm = grid.norm(values);
    let peak = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = 1e-3 * peak;
    let n = values.len();
    let mut sign = 1.0;
    for i in 1..n - 1 {
        let a = values[i].abs();
        if a >= floor && a >= values[i - 1].abs() && a >= values[i + 1].abs() {
            sign = values[i].signum();
            break;
        }
    }
    let s = sign / norm;
    values.iter_mut().for_each(|v| *v *= s);
    derivs.iter_mut().for_each(|v| *v *= s);
    norm
}

pub(crate) struct CrumContext<'a> {
    pub seeds: &'a SeedFamily,
    pub rules: Vec<DerivativeRule>,
    pub xs: Vec<f64>,
    /// (W, W′) at each grid point.
    pub wronskian: &'a [(Dd, Dd)],
}

impl<'a> CrumContext<'a> {
    pub fn new(seeds: &'a SeedFamily, wronskian: &'a [(Dd, Dd)]) -> Self {
        let k = seeds.k();
        let rules = (0..k).map(|j| DerivativeRule::new_dd(seeds.energy_dd(j), k + 1)).collect();
        Self {
            seeds,
            rules,
            xs: seeds.grid.points(),
            wronskian,
        }
    }

    fn seed_columns(&self, i: usize) -> Vec<Column<'_>> {
        (0..self.seeds.k())
            .map(|j| {
                let (value, deriv) = self.seeds.pair_dd(j, i);
                Column {
                    rule: &self.rules[j],
                    value,
                    deriv,
                }
            })
            .collect()
    }

    /// (D/W, (D/W)′) from a minor D and its derivative D′.
    fn ratio(&self, i: usize, d: Dd, dd: Dd) -> (f64, f64) {
        let (w, w1) = self.wronskian[i];
        let r = d / w;
        (r.to_f64(), ((dd - r * w1) / w).to_f64())
    }
}

/// φ_n^{(k)} = W[u₀,…,u_{k−1},ψ_n] / W[u₀,…,u_{k−1}], normalized.
pub(crate) fn iso_state(ctx: &CrumContext<'_>, potential: &[f64], n: usize) -> Result<State> {
    let k = ctx.seeds.k();
    let energy = n as f64 + 0.5;
    let rule = DerivativeRule::new(energy, k + 1);
    let orders: Vec<usize> = (0..=k).collect();
    let mut shifted = orders.clone();
    shifted[k] = k + 1;
    let (mut values, mut derivs): (Vec<f64>, Vec<f64>) = ctx
        .xs
        .par_iter()
        .enumerate()
        .map(|(i, &x)| {
            let (psi, dpsi) = oscillator_pair(n, x);
            let mut cols = ctx.seed_columns(i);
            cols.push(Column::new(&rule, psi, dpsi));
            ctx.ratio(i, derivative_det_dd(x, &cols, &orders), derivative_det_dd(x, &cols, &shifted))
        })
        .unzip();
    let grid = ctx.seeds.grid;
    let norm = normalize_with_sign(&grid, &mut values, &mut derivs);
    // ‖W[u…,ψ_n]/W[u…]‖² = 2^k ∏ (E_n − ε_j). Only meaningful while ψ_n
    // itself fits on the grid; higher levels leak past the edges.
    let psi: Vec<f64> = ctx.xs.iter().map(|&x| oscillator_eigenstate(n, x)).collect();
    let leaked = (1.0 - grid.inner(&psi, &psi)).abs();
    if leaked < CRUM_CHECK_MAX_LEAK {
        let analytic: f64 = ctx
            .seeds
            .energies
            .iter()
            .map(|e| 2.0 * (energy - e))
            .product::<f64>()
            .sqrt();
        let gap = (norm / analytic - 1.0).abs();
        if gap > CRUM_NORM_TOL {
            return Err(Error::Construction {
                stage: "iso_state",
                detail: format!("level {n}: analytic and grid norms differ by {gap:e}"),
            });
        }
    }
    let residual = hamiltonian_residual(&grid, potential, energy, &values);
    Ok(State {
        level: Level::Iso(n),
        energy,
        values,
        derivs,
        residual,
    })
}

/// φ_{ε_j}^{(k)} ∝ W[u₀,…,û_j,…,u_{k−1}] / W[u₀,…,u_{k−1}], normalized.
pub(crate) fn new_state(ctx: &CrumContext<'_>, potential: &[f64], j: usize) -> Result<State> {
    let k = ctx.seeds.k();
    if j >= k {
        return Err(Error::Usage(format!("new level {j} out of range for k = {k}")));
    }
    let orders: Vec<usize> = (0..k - 1).collect();
    let mut shifted = orders.clone();
    if let Some(last) = shifted.last_mut() {
        *last = k - 1;
    }
    let (mut values, mut derivs): (Vec<f64>, Vec<f64>) = ctx
        .xs
        .par_iter()
        .enumerate()
        .map(|(i, &x)| {
            let mut cols = ctx.seed_columns(i);
            cols.remove(j);
            // For k = 1 the minor is the constant 1.
            let dd = if k == 1 { Dd::ZERO } else { derivative_det_dd(x, &cols, &shifted) };
            ctx.ratio(i, derivative_det_dd(x, &cols, &orders), dd)
        })
        .unzip();
    let grid = ctx.seeds.grid;
    let peak = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let edge = values[0].abs().max(values[values.len() - 1].abs());
    if !(edge <= 1e-6 * peak) {
        return Err(Error::Construction {
            stage: "new_state",
            detail: format!("level ε_{j} is not normalizable on the grid (edge/peak = {:e})", edge / peak),
        });
    }
    normalize_with_sign(&grid, &mut values, &mut derivs);
    let energy = ctx.seeds.energies[j];
    let residual = hamiltonian_residual(&grid, potential, energy, &values);
    if !(residual < NEW_STATE_RESIDUAL_TOL) {
        return Err(Error::Construction {
            stage: "new_state",
            detail: format!("level ε_{j} fails the Hamiltonian residual ({residual:e})"),
        });
    }
    Ok(State {
        level: Level::New(j),
        energy,
        values,
        derivs,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ground_state_closed_form() {
        for &x in &[-2.0f64, 0.0, 1.3] {
            let exact = PI.powf(-0.25) * (-0.5 * x * x).exp();
            assert!((oscillator_eigenstate(0, x) - exact).abs() < 1e-16);
        }
        assert_eq!(oscillator_eigenstate(1, 0.0), 0.0);
    }

    #[test]
    fn hermite_functions_orthonormal() {
        let g = Grid::default();
        let xs = g.points();
        let psi3: Vec<f64> = xs.iter().map(|&x| oscillator_eigenstate(3, x)).collect();
        assert!((g.inner(&psi3, &psi3) - 1.0).abs() < 1e-10);
        let psi5: Vec<f64> = xs.iter().map(|&x| oscillator_eigenstate(5, x)).collect();
        assert!(g.inner(&psi3, &psi5).abs() < 1e-12);
    }

    #[test]
    fn hermite_derivative_matches_difference() {
        let h = 1e-6;
        for n in [0, 1, 4, 9] {
            let x = 0.83;
            let fd = (oscillator_eigenstate(n, x + h) - oscillator_eigenstate(n, x - h)) / (2.0 * h);
            assert!((fd - oscillator_pair(n, x).1).abs() < 1e-8);
        }
    }

    #[test]
    fn oscillator_residual_is_small() {
        let g = Grid::default();
        let xs = g.points();
        let v: Vec<f64> = xs.iter().map(|x| 0.5 * x * x).collect();
        let psi: Vec<f64> = xs.iter().map(|&x| oscillator_eigenstate(4, x)).collect();
        assert!(hamiltonian_residual(&g, &v, 4.5, &psi) < 1e-6);
        assert!(hamiltonian_residual(&g, &v, 4.6, &psi) > 1e-2);
    }
}
