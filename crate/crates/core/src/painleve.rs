//! Painlevé IV transcendents carried by the third-order ladder operators of
//! H_k.
//!
//! With ε₁ the energy of a nodeless extremal state φ_{ε₁},
//! g = −x − (ln φ_{ε₁})′ solves
//!
//! g″ = g′²/(2g) + (3/2)g³ + 4xg² + 2(x² − a)g + b/g,
//!
//! a = ε₂ + ε₃ − 2ε₁ − 1, b = −2(ε₂ − ε₃)², where {ε₁, ε₂, ε₃} are the
//! roots {1/2, ε₀, ε_{k−1}+1} of the ladder product.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{self, Grid};
use crate::susy::{hamiltonian_residual, State, SusySystem, SystemSpec};
use crate::E0;

/// |g| below which a sample is excluded from the b/g and g′²/2g terms.
pub const G_FLOOR: f64 = 1e-6;
/// Samples masked on each side of a node of φ_{ε₁}.
pub const GUARD_BAND: usize = 3;
/// Guard band that keeps the 5-point stencils far enough from the poles of g
/// at nodes of φ_{ε₁} for the residual to reach 1e−5 on the default grid.
pub const WIDE_GUARD_BAND: usize = 20;
/// Default acceptance bound on the max relative ODE residual.
pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-5;

/// The three extremal energies {1/2, ε₀, ε_{k−1}+1}.
pub fn extremal_roots(spec: &SystemSpec) -> [f64; 3] {
    [E0, spec.eps0(), spec.eps_top + 1.0]
}

/// One of the three extremal energies, by role.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Root {
    /// E₀ = 1/2, bottom of the isospectral ladder.
    Half,
    /// ε₀, bottom of the new ladder.
    Eps0,
    /// ε_{k−1} + 1, the unphysical root.
    TopPlusOne,
}

impl Root {
    pub fn energy(self, spec: &SystemSpec) -> f64 {
        let [half, eps0, top] = extremal_roots(spec);
        match self {
            Root::Half => half,
            Root::Eps0 => eps0,
            Root::TopPlusOne => top,
        }
    }
}

impl fmt::Display for Root {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Root::Half => "half",
            Root::Eps0 => "eps0",
            Root::TopPlusOne => "top+1",
        })
    }
}

impl FromStr for Root {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "half" | "e0" | "1/2" | "0.5" => Ok(Root::Half),
            "eps0" => Ok(Root::Eps0),
            "top+1" | "top" | "epstop+1" => Ok(Root::TopPlusOne),
            other => Err(Error::Usage(format!("unknown extremal root '{other}' (use half, eps0 or top+1)"))),
        }
    }
}

/// Which root plays ε₁, ε₂, ε₃.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub roles: [Root; 3],
    pub eps1: f64,
    pub eps2: f64,
    pub eps3: f64,
}

impl Assignment {
    pub fn new(spec: &SystemSpec, roles: [Root; 3]) -> Result<Self> {
        let mut seen = roles.to_vec();
        seen.sort_by_key(|r| *r as u8);
        seen.dedup();
        if seen.len() != 3 {
            return Err(Error::Usage(format!("assignment {roles:?} is not a permutation of the roots")));
        }
        Ok(Self {
            roles,
            eps1: roles[0].energy(spec),
            eps2: roles[1].energy(spec),
            eps3: roles[2].energy(spec),
        })
    }

    /// ε₁ := 1/2, ε₂ := ε_{k−1}+1, ε₃ := ε₀. For k ≥ 1 the state φ₀ of
    /// H_k sits above the k new levels and has k nodes, so g has poles.
    pub fn standard(spec: &SystemSpec) -> Self {
        Self::new(spec, [Root::Half, Root::TopPlusOne, Root::Eps0]).expect("fixed permutation")
    }

    /// ε₁ := ε₀, ε₂ := 1/2, ε₃ := ε_{k−1}+1: the cyclic shift whose
    /// extremal state φ_{ε₀} is the nodeless ground state of H_k, giving a
    /// pole-free g.
    pub fn nodeless(spec: &SystemSpec) -> Self {
        Self::cyclic(spec, Root::Eps0)
    }

    /// The cyclic shift of the standard assignment that puts `first` in the
    /// ε₁ slot.
    pub fn cyclic(spec: &SystemSpec, first: Root) -> Self {
        let base = [Root::Half, Root::TopPlusOne, Root::Eps0];
        let s = base.iter().position(|r| *r == first).unwrap_or(0);
        Self::new(spec, [base[s], base[(s + 1) % 3], base[(s + 2) % 3]]).expect("cyclic permutation")
    }

    pub fn a(&self) -> f64 {
        self.eps2 + self.eps3 - 2.0 * self.eps1 - 1.0
    }

    pub fn b(&self) -> f64 {
        let d = self.eps2 - self.eps3;
        -2.0 * d * d
    }

    /// The same roles with ε₂ and ε₃ exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            roles: [self.roles[0], self.roles[2], self.roles[1]],
            eps1: self.eps1,
            eps2: self.eps3,
            eps3: self.eps2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualStats {
    pub max: f64,
    pub mean: f64,
    /// Interior points where the residual was evaluated.
    pub evaluated: usize,
    /// Interior points skipped by the mask or the g floor.
    pub skipped: usize,
}

/// g(x) sampled on a grid with its mask and ODE residual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PainleveSolution {
    pub grid: Grid,
    pub assignment: Assignment,
    pub a: f64,
    pub b: f64,
    /// NaN where masked.
    pub g: Vec<f64>,
    /// g′ from the state's analytic derivative, NaN where masked.
    pub dg: Vec<f64>,
    /// NaN where not evaluated.
    pub residual: Vec<f64>,
    pub stats: ResidualStats,
}

impl PainleveSolution {
    pub fn xs(&self) -> Vec<f64> {
        self.grid.points()
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.stats.max < tol
    }
}

/// Masks `band` samples around every sign change of `phi`.
fn node_mask(phi: &[f64], band: usize) -> Vec<bool> {
    let n = phi.len();
    let mut ok = vec![true; n];
    for i in 1..n {
        if phi[i] == 0.0 || phi[i].signum() != phi[i - 1].signum() {
            let lo = i.saturating_sub(band + 1);
            let hi = (i + band).min(n - 1);
            ok[lo..=hi].iter_mut().for_each(|m| *m = false);
        }
    }
    ok
}

/// g = −x − φ′/φ, φ′ from the 5-point stencil; masked samples are NaN.
pub fn g_from_extremal(grid: &Grid, phi: &[f64]) -> Vec<f64> {
    let dphi = grid::d1(phi, grid.step());
    let ok = node_mask(phi, GUARD_BAND);
    grid.points()
        .iter()
        .enumerate()
        .map(|(i, &x)| if ok[i] { -x - dphi[i] / phi[i] } else { f64::NAN })
        .collect()
}

/// g = −x − φ′/φ from a state carrying its analytic derivative.
pub fn g_from_state(grid: &Grid, phi: &[f64], dphi: &[f64], band: usize) -> Vec<f64> {
    let ok = node_mask(phi, band);
    grid.points()
        .iter()
        .enumerate()
        .map(|(i, &x)| if ok[i] { -x - dphi[i] / phi[i] } else { f64::NAN })
        .collect()
}

/// g′ = −1 − 2(V − ε₁) + (g + x)², from φ″ = 2(V − ε₁)φ.
pub fn slope_from_state(grid: &Grid, g: &[f64], potential: &[f64], eps1: f64) -> Vec<f64> {
    grid.points()
        .iter()
        .enumerate()
        .map(|(i, &x)| -1.0 - 2.0 * (potential[i] - eps1) + (g[i] + x) * (g[i] + x))
        .collect()
}

/// Pointwise relative Painlevé IV residual and its statistics over the
/// interior. Points with masked neighbours or |g| < `G_FLOOR` are skipped.
pub fn piv_residual(grid: &Grid, g: &[f64], a: f64, b: f64) -> Result<(Vec<f64>, ResidualStats)> {
    let h = grid.step();
    let dg = grid::d1(g, h);
    let ddg = grid::d2(g, h);
    let n = g.len();
    let band = grid::STENCIL_HALF_WIDTH;
    let interior = n - 2 * band;
    let mut res = vec![f64::NAN; n];
    let mut sum = 0.0;
    let mut max: f64 = 0.0;
    let mut evaluated = 0usize;
    for i in band..n - band {
        let x = grid.x(i);
        let (g0, g1, g2) = (g[i], dg[i], ddg[i]);
        if !(g0.is_finite() && g1.is_finite() && g2.is_finite()) || g0.abs() < G_FLOOR {
            continue;
        }
        let terms = [
            g1 * g1 / (2.0 * g0),
            1.5 * g0 * g0 * g0,
            4.0 * x * g0 * g0,
            2.0 * (x * x - a) * g0,
            b / g0,
        ];
        let scale = terms.iter().fold(g2.abs(), |m, t| m.max(t.abs()));
        let r = (g2 - terms.iter().sum::<f64>()).abs() / scale;
        res[i] = r;
        sum += r;
        max = max.max(r);
        evaluated += 1;
    }
    if 2 * evaluated < interior {
        return Err(Error::InsufficientSupport {
            evaluable: evaluated,
            total: interior,
        });
    }
    let stats = ResidualStats {
        max,
        mean: sum / evaluated as f64,
        evaluated,
        skipped: interior - evaluated,
    };
    Ok((res, stats))
}

/// V = x²/2 − g′/2 + g²/2 + xg + ε₁ − 1/2 (NaN where g′ is unavailable).
pub fn potential_from_g(grid: &Grid, g: &[f64], eps1: f64) -> Vec<f64> {
    let dg = grid::d1(g, grid.step());
    grid.points()
        .iter()
        .enumerate()
        .map(|(i, &x)| 0.5 * x * x - 0.5 * dg[i] + 0.5 * g[i] * g[i] + x * g[i] + eps1 - 0.5)
        .collect()
}

/// The extremal state of H_k at ε₁ for the roles that have one in the
/// spectrum. The unphysical root needs the companion construction.
pub fn extremal_state(system: &SusySystem, root: Root) -> Result<&State> {
    match root {
        Root::Half => Ok(&system.iso_states[0]),
        Root::Eps0 => Ok(&system.new_states[0]),
        Root::TopPlusOne => Err(Error::Usage(
            "ε_(k-1)+1 is not in the spectrum; use it as ε₂ or ε₃".into(),
        )),
    }
}

/// Full extraction for one assignment, with optional shift of `a` used as a
/// negative control.
pub fn solve(system: &SusySystem, assignment: Assignment, perturb_a: f64) -> Result<PainleveSolution> {
    solve_with_band(system, assignment, perturb_a, GUARD_BAND)
}

/// [`solve`] with an explicit guard band around nodes of φ_{ε₁}.
pub fn solve_with_band(
    system: &SusySystem,
    assignment: Assignment,
    perturb_a: f64,
    band: usize,
) -> Result<PainleveSolution> {
    let grid = system.grid();
    let phi = extremal_state(system, assignment.roles[0])?;
    let g = g_from_state(&grid, &phi.values, &phi.derivs, band);
    let dg = slope_from_state(&grid, &g, &system.potential, assignment.eps1);
    let a = assignment.a() + perturb_a;
    let b = assignment.b();
    let (residual, stats) = piv_residual(&grid, &g, a, b)?;
    Ok(PainleveSolution {
        grid,
        assignment,
        a,
        b,
        g,
        dg,
        residual,
        stats,
    })
}

/// A companion extremal state with its Hamiltonian residual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompanionState {
    pub energy: f64,
    /// NaN where masked; scaled to unit peak on the unmasked support.
    pub values: Vec<f64>,
    pub residual: f64,
}

/// Lagrange interpolant through `(xs, ys)` evaluated at `x`.
fn lagrange(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let mut sum = 0.0;
    for (i, (&xi, &yi)) in xs.iter().zip(ys).enumerate() {
        let w: f64 = xs
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, &xj)| (x - xj) / (xi - xj))
            .product();
        sum += w * yi;
    }
    sum
}

/// Residue c of s/g at each sample, taken from the nearest sign change of g.
///
/// At a zero of a Painlevé IV solution g′² = −2b = 4s², so c = s/g′ = ±½
/// exactly. Away from zeros c only selects the split
/// s/g = (s − c·g′)/g + c·g′/g, whose first part is regular everywhere near
/// the chosen zero and whose second integrates to c·ln|g|.
fn residues(g: &[f64], dg: &[f64], s: f64) -> (Vec<f64>, Vec<usize>) {
    let n = g.len();
    let mut crossings = Vec::new();
    let mut last: Option<usize> = None;
    for i in 0..n {
        if !g[i].is_finite() {
            last = None;
            continue;
        }
        if g[i].abs() < G_FLOOR {
            continue;
        }
        if let Some(j) = last {
            if g[j].signum() != g[i].signum() {
                let slope = if dg[j].abs() > dg[i].abs() { dg[j] } else { dg[i] };
                crossings.push((j, i, 0.5 * (s / slope).signum()));
            }
        }
        last = Some(i);
    }
    let mut c = vec![0.0; n];
    for (i, ci) in c.iter_mut().enumerate() {
        if let Some(&(_, _, r)) = crossings
            .iter()
            .min_by_key(|(j, k, _)| i.abs_diff(*j).min(i.abs_diff(*k)))
        {
            *ci = r;
        }
    }
    // Crossings with c = +½ flip the sign of the closed form.
    let flips = crossings.iter().filter(|z| z.2 > 0.0).map(|z| z.1).collect();
    (c, flips)
}

/// Maximal runs of consecutive usable samples.
fn runs(usable: &[bool]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, &u) in usable.iter().enumerate() {
        match (u, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push((s, i));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s, usable.len()));
    }
    out
}

/// ∫ q over `lo..hi` from the start of the run, with
/// q = g/2 + (s − c·g′)/g + c·g′/g. The regular part uses the four-point
/// rule in the interior (trapezoid at the run ends), the last term is exact.
fn exponent_integral(g: &[f64], dg: &[f64], c: &[f64], s: f64, h: f64, lo: usize, hi: usize) -> Vec<f64> {
    let reg = |j: usize, cj: f64| 0.5 * g[j] + (s - cj * dg[j]) / g[j];
    let mut out = vec![0.0; hi - lo];
    for i in lo + 1..hi {
        // One residue per interval, from its right end.
        let ci = c[i];
        let step = if i >= lo + 2 && i + 1 < hi {
            h / 24.0 * (-reg(i - 2, ci) + 13.0 * reg(i - 1, ci) + 13.0 * reg(i, ci) - reg(i + 1, ci))
        } else {
            0.5 * h * (reg(i - 1, ci) + reg(i, ci))
        };
        let log = ci * (g[i].abs().ln() - g[i - 1].abs().ln());
        out[i - lo] = out[i - lo - 1] + step + log;
    }
    out
}

/// Scale for run `moving` that makes it the smooth continuation of run
/// `fixed` across the gap between them. Degree-4 fits to the samples next to
/// the gap on each side are compared on the samples of both sides and in the
/// gap, so a node inside the gap does not spoil the match.
fn continuation_scale(xs: &[f64], values: &[f64], fixed: (usize, usize), moving: (usize, usize)) -> f64 {
    const M: usize = 5;
    let near = |run: (usize, usize), left_of_gap: bool| {
        if left_of_gap {
            (run.1.saturating_sub(M).max(run.0), run.1)
        } else {
            (run.0, (run.0 + M).min(run.1))
        }
    };
    let fixed_left = fixed.1 <= moving.0;
    let (f0, f1) = near(fixed, fixed_left);
    let (m0, m1) = near(moving, !fixed_left);
    let window = f0.min(m0)..f1.max(m1);
    let (mut num, mut den) = (0.0, 0.0);
    for i in window {
        let x = xs[i];
        let a = if (f0..f1).contains(&i) { values[i] } else { lagrange(&xs[f0..f1], &values[f0..f1], x) };
        let b = if (m0..m1).contains(&i) { values[i] } else { lagrange(&xs[m0..m1], &values[m0..m1], x) };
        num += a * b;
        den += b * b;
    }
    if den > 0.0 && num.is_finite() {
        num / den
    } else {
        1.0
    }
}

fn companion(grid: &Grid, g: &[f64], dg: &[f64], potential: &[f64], energy: f64, s: f64) -> CompanionState {
    let n = g.len();
    let h = grid.step();
    let xs = grid.points();
    let usable: Vec<bool> = (0..n)
        .map(|i| g[i].is_finite() && dg[i].is_finite() && g[i].abs() >= G_FLOOR)
        .collect();
    let (c, flips) = residues(g, dg, s);
    let mut values = vec![f64::NAN; n];
    let segments = runs(&usable);
    for &(lo, hi) in &segments {
        let integral = exponent_integral(g, dg, &c, s, h, lo, hi);
        // ∫ g′/2g = ½ ln|g| exactly.
        let log_amp: Vec<f64> = (lo..hi).map(|i| 0.5 * g[i].abs().ln() + integral[i - lo]).collect();
        let peak = log_amp.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for i in lo..hi {
            let pre = dg[i] / (2.0 * g[i]) - 0.5 * g[i] + s / g[i] - xs[i];
            let sign = if flips.iter().filter(|&&f| i >= f).count() % 2 == 1 { -1.0 } else { 1.0 };
            values[i] = sign * pre * (log_amp[i - lo] - peak).exp();
        }
    }
    // Stitch runs separated by masked gaps outward from the longest run.
    if let Some(base) = (0..segments.len()).max_by_key(|&r| segments[r].1 - segments[r].0) {
        for r in base + 1..segments.len() {
            let k = continuation_scale(&xs, &values, segments[r - 1], segments[r]);
            let (lo, hi) = segments[r];
            values[lo..hi].iter_mut().for_each(|v| *v *= k);
        }
        for r in (0..base).rev() {
            let k = continuation_scale(&xs, &values, segments[r + 1], segments[r]);
            let (lo, hi) = segments[r];
            values[lo..hi].iter_mut().for_each(|v| *v *= k);
        }
    }
    let peak = values.iter().filter(|v| v.is_finite()).fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        values.iter_mut().for_each(|v| *v /= peak);
    }
    let residual = masked_residual(grid, potential, energy, &values);
    CompanionState { energy, values, residual }
}

/// Hamiltonian residual over maximal unmasked runs, pooled.
fn masked_residual(grid: &Grid, potential: &[f64], energy: f64, values: &[f64]) -> f64 {
    let h = grid.step();
    let dd = grid::d2(values, h);
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..values.len() {
        if dd[i].is_finite() && potential[i].is_finite() {
            let r = -0.5 * dd[i] + (potential[i] - energy) * values[i];
            num += r * r;
            den += values[i] * values[i];
        }
    }
    if den == 0.0 {
        f64::NAN
    } else {
        (num / den).sqrt()
    }
}

/// φ_{ε₂} and φ_{ε₃} from g by the closed forms
///
/// φ_{ε₂,₃} ∝ (g′/2g − g/2 ∓ δ/g − x)·exp ∫(g′/2g + g/2 ∓ δ/g), δ = ε₂ − ε₃,
///
/// each with its H-residual against V rebuilt from g. `dg` enters the
/// prefactor, where it is divided by g, so it should be accurate near zeros
/// of g (see [`slope_from_state`]).
pub fn companion_extremal_states(
    grid: &Grid,
    g: &[f64],
    dg: &[f64],
    eps1: f64,
    eps2: f64,
    eps3: f64,
) -> [CompanionState; 2] {
    let v = potential_from_g(grid, g, eps1);
    let d = eps2 - eps3;
    [companion(grid, g, dg, &v, eps2, -d), companion(grid, g, dg, &v, eps3, d)]
}

/// [`companion_extremal_states`] for a solved assignment.
pub fn companions(solution: &PainleveSolution) -> [CompanionState; 2] {
    let a = &solution.assignment;
    companion_extremal_states(&solution.grid, &solution.g, &solution.dg, a.eps1, a.eps2, a.eps3)
}

/// Cosine similarity of two sampled functions over indices where both are
/// finite.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> f64 {
    let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        if x.is_finite() && y.is_finite() {
            ab += x * y;
            aa += x * x;
            bb += y * y;
        }
    }
    ab / (aa * bb).sqrt()
}

/// Sup-norm gap between two sampled functions over indices where both are
/// finite.
pub fn sup_gap(v1: &[f64], v2: &[f64]) -> f64 {
    v1.iter()
        .zip(v2)
        .filter(|(a, b)| a.is_finite() && b.is_finite())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// Masked-fraction summary of a sampled function.
pub fn masked_count(values: &[f64]) -> usize {
    values.iter().filter(|v| !v.is_finite()).count()
}

/// Residual of an arbitrary eigenfunction on the unmasked region.
pub fn state_residual(grid: &Grid, potential: &[f64], energy: f64, values: &[f64]) -> f64 {
    if values.iter().all(|v| v.is_finite()) {
        hamiltonian_residual(grid, potential, energy, values)
    } else {
        masked_residual(grid, potential, energy, values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::susy::{build_system, seed_solution};

    fn k1() -> SusySystem {
        build_system(&SystemSpec::new(1, -1.0, 0.5), 2).unwrap()
    }

    #[test]
    fn roots_and_parameters() {
        assert_eq!(extremal_roots(&SystemSpec::new(1, -1.0, 0.5)), [0.5, -1.0, 0.0]);
        let spec = SystemSpec::new(4, -2.8, -0.9);
        let [h, e0, top] = extremal_roots(&spec);
        assert_eq!(h, 0.5);
        assert!((e0 + 5.8).abs() < 1e-12 && (top + 1.8).abs() < 1e-12);
        assert!(h != e0 && e0 != top && top != h);

        let std = Assignment::standard(&spec);
        assert!((std.a() - (top + e0 - 2.0 * h - 1.0)).abs() < 1e-12);
        assert!((std.b() + 2.0 * (top - e0).powi(2)).abs() < 1e-12);

        use Root::*;
        let perms = [
            [Half, Eps0, TopPlusOne],
            [Half, TopPlusOne, Eps0],
            [Eps0, Half, TopPlusOne],
            [Eps0, TopPlusOne, Half],
            [TopPlusOne, Half, Eps0],
            [TopPlusOne, Eps0, Half],
        ];
        for p in perms {
            let a = Assignment::new(&spec, p).unwrap();
            assert!(a.b() <= 0.0 && a.a().is_finite());
        }
        let pairs: Vec<(f64, f64)> = [Half, Eps0, TopPlusOne]
            .iter()
            .map(|&r| {
                let a = Assignment::cyclic(&spec, r);
                (a.a(), a.b())
            })
            .collect();
        for i in 0..3 {
            for j in i + 1..3 {
                assert!(pairs[i] != pairs[j]);
            }
        }
        assert!(Assignment::new(&spec, [Half, Half, Eps0]).is_err());
        assert_eq!("eps0".parse::<Root>().unwrap(), Eps0);
        assert_eq!("top+1".parse::<Root>().unwrap(), TopPlusOne);
        assert!("e7".parse::<Root>().is_err());
    }

    #[test]
    fn oscillator_ground_state_gives_vanishing_g() {
        let grid = Grid::default();
        let phi: Vec<f64> = grid.points().iter().map(|x| (-0.5 * x * x).exp()).collect();
        let g = g_from_extremal(&grid, &phi);
        // Stencil truncation of (ln φ)′ grows like h⁴x⁵ toward the edges.
        for (gi, x) in g.iter().zip(grid.points()) {
            if x.abs() < 7.9 {
                assert!(gi.abs() < 1e-8 * (1.0 + x.abs().powi(5)), "x={x} g={gi}");
            }
        }
        let v = potential_from_g(&grid, &vec![0.0; grid.n_points], 0.5);
        for (vi, x) in v.iter().zip(grid.points()) {
            assert!(vi.is_nan() || (vi - 0.5 * x * x).abs() < 1e-13);
        }
    }

    #[test]
    fn k1_nodeless_g_is_seed_log_derivative() {
        let sys = k1();
        let sol = solve(&sys, Assignment::nodeless(&sys.spec), 0.0).unwrap();
        for (i, x) in sol.xs().iter().enumerate().step_by(97) {
            let (u, du) = seed_solution(*x, -1.0, 0.5).unwrap();
            let expect = -x + du / u;
            assert!((sol.g[i] - expect).abs() <= 1e-9 * expect.abs().max(1.0), "x={x}");
        }
    }

    #[test]
    fn k1_even_seed_residual() {
        let sys = build_system(&SystemSpec::new(1, -1.0, 0.0), 2).unwrap();
        let sol = solve(&sys, Assignment::nodeless(&sys.spec), 0.0).unwrap();
        assert!(sol.stats.max < 1e-6, "{:?}", sol.stats);
        assert!(sol.b <= 0.0);
    }

    #[test]
    fn residual_converges_at_fourth_order() {
        let coarse = SystemSpec::new(1, -1.0, 0.5).with_grid(Grid::new(-8.0, 8.0, 801).unwrap());
        let fine = coarse.with_grid(coarse.grid.refined());
        let r = |spec: &SystemSpec| {
            let sys = build_system(spec, 2).unwrap();
            solve(&sys, Assignment::nodeless(spec), 0.0).unwrap().stats.max
        };
        let (rc, rf) = (r(&coarse), r(&fine));
        assert!(rc / rf > 12.0, "{rc:e} -> {rf:e}");
    }

    #[test]
    fn shifted_a_fails() {
        let sys = k1();
        let asg = Assignment::nodeless(&sys.spec);
        assert!(solve(&sys, asg, 0.0).unwrap().passes(DEFAULT_RESIDUAL_TOL));
        let bad = solve(&sys, asg, 1.0).unwrap();
        assert!(bad.stats.max > 1e-2);
    }

    #[test]
    fn potential_from_g_matches_wronskian_potential() {
        let sys = k1();
        let asg = Assignment::nodeless(&sys.spec);
        let sol = solve(&sys, asg, 0.0).unwrap();
        let v = potential_from_g(&sys.grid(), &sol.g, asg.eps1);
        assert!(sup_gap(&v, &sys.potential) < 1e-5);
    }

    #[test]
    fn noded_extremal_state_needs_wide_band() {
        let sys = k1();
        let asg = Assignment::standard(&sys.spec);
        let narrow = solve(&sys, asg, 0.0).unwrap();
        assert!(masked_count(&narrow.g) > 0);
        assert!(narrow.stats.max > DEFAULT_RESIDUAL_TOL);
        let wide = solve_with_band(&sys, asg, 0.0, WIDE_GUARD_BAND).unwrap();
        assert!(wide.passes(DEFAULT_RESIDUAL_TOL), "{:?}", wide.stats);
    }

    #[test]
    fn unphysical_root_has_no_state() {
        let sys = k1();
        let asg = Assignment::cyclic(&sys.spec, Root::TopPlusOne);
        assert!(matches!(solve(&sys, asg, 0.0), Err(Error::Usage(_))));
    }

    #[test]
    fn companion_states() {
        let sys = k1();
        let sol = solve(&sys, Assignment::nodeless(&sys.spec), 0.0).unwrap();
        let [half, top] = companions(&sol);
        assert_eq!(half.energy, 0.5);
        assert_eq!(top.energy, 0.0);
        assert!(half.residual < 1e-3 && top.residual < 1e-3);
        let cos = cosine_similarity(&half.values, &sys.iso_states[0].values);
        assert!(cos.abs() > 1.0 - 1e-6, "{cos}");

        let swapped = sol.assignment.swapped();
        let [b, a] = companion_extremal_states(&sol.grid, &sol.g, &sol.dg, swapped.eps1, swapped.eps2, swapped.eps3);
        assert_eq!(a.values.len(), half.values.len());
        for (x, y) in a.values.iter().zip(&half.values).chain(b.values.iter().zip(&top.values)) {
            assert!(x == y || (x.is_nan() && y.is_nan()));
        }
    }
}
