//! Coherent states of the Painlevé IV Hamiltonians.
//!
//! Four families are built from coefficient formulas in the energy basis:
//!
//! - `AocsIso`: eigenstates of l⁻ on H_iso,
//!   c_n = c₀ zⁿ / √(n! (A+1)_n (A−k+1)_n), c₀ = ₀F₂(A+1, A−k+1; |z|²)^{−1/2};
//! - `DocsNew`: the displaced extremal state of H_new,
//!   c_j = N_z √((A−j)_j (k−j)_j) z^j / √j!;
//! - `LinIso`: oscillator-like states of the linearized ladder on H_iso;
//! - `LinNew`: c_j = C_z (iz)^j / (j! √Γ(A−j)).
//!
//! Here A = E₀ − ε₀. Iso families are truncated per label so that the
//! dropped tail has norm below [`TAIL_TOL`].

pub mod measure;

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ladder::{LadderCoeffs, Subspace};
use crate::specfun::{gamma, hyp0f2, quadrature::Neumaier};
use crate::susy::{Level, SusySystem};
use crate::E0;

pub use measure::{
    identity_resolution_check, IdentityReport, MeasureFamily, MeasureFn, MomentCheck, Mu2Branch,
};

/// Largest admissible norm of the dropped tail of an iso-family state.
pub const TAIL_TOL: f64 = 1e-12;

/// Hard cap on the iso-family truncation.
pub const MAX_LEVELS: usize = 256;

/// Partial-sum level that certifies divergence of the ₂F₀ norm series.
pub const DIVERGENCE_THRESHOLD: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    AocsIso,
    DocsNew,
    LinIso,
    LinNew,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::AocsIso, Family::DocsNew, Family::LinIso, Family::LinNew];

    pub fn subspace(self) -> Subspace {
        match self {
            Family::AocsIso | Family::LinIso => Subspace::Iso,
            Family::DocsNew | Family::LinNew => Subspace::New,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::AocsIso => "aocs-iso",
            Family::DocsNew => "docs-new",
            Family::LinIso => "lin-iso",
            Family::LinNew => "lin-new",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "aocs-iso" | "aocs" => Ok(Family::AocsIso),
            "docs-new" => Ok(Family::DocsNew),
            "lin-iso" => Ok(Family::LinIso),
            "lin-new" => Ok(Family::LinNew),
            "docs-iso" => Err(Error::Usage(
                "docs-iso is not a coherent-state family: its norm is proportional to \
                 2F0(E0-eps0+1, E0-eps0-k+1; |z|^2), which diverges for every z != 0"
                    .into(),
            )),
            "aocs-new" => Err(Error::Usage(
                "aocs-new admits only z = 0: l- restricted to H_new is nilpotent".into(),
            )),
            other => Err(Error::Usage(format!(
                "unknown family `{other}` (expected aocs-iso, docs-new, lin-iso or lin-new)"
            ))),
        }
    }
}

/// A complex label kept in polar form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Label {
    pub modulus: f64,
    /// Radians.
    pub phase: f64,
}

impl Label {
    pub fn polar(modulus: f64, phase: f64) -> Result<Self> {
        if !(modulus >= 0.0) || !modulus.is_finite() || !phase.is_finite() {
            return Err(Error::Usage(format!("bad label {modulus}@{phase}")));
        }
        Ok(Self { modulus, phase })
    }

    pub fn from_complex(z: Complex64) -> Self {
        Self {
            modulus: z.norm(),
            phase: if z == Complex64::new(0.0, 0.0) { 0.0 } else { z.arg() },
        }
    }

    pub fn zero() -> Self {
        Self { modulus: 0.0, phase: 0.0 }
    }

    pub fn complex(&self) -> Complex64 {
        Complex64::from_polar(self.modulus, self.phase)
    }

    /// z · e^{−it}.
    pub fn rotated(&self, t: f64) -> Self {
        Self {
            modulus: self.modulus,
            phase: self.phase - t,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.modulus, self.phase)
    }
}

/// Accepts `R@theta` (radians) or rectangular `a,b`.
impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Usage(format!("cannot parse z = `{s}` (expected R@theta or a,b)"));
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
        if let Some((r, th)) = s.split_once('@') {
            let (r, th) = (num(r)?, num(th)?);
            if r < 0.0 {
                return Err(Error::Usage(format!("modulus in `{s}` must be non-negative")));
            }
            Label::polar(r, th)
        } else if let Some((a, b)) = s.split_once(',') {
            let z = Complex64::new(num(a)?, num(b)?);
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(bad());
            }
            Ok(Label::from_complex(z))
        } else {
            Ok(Label::from_complex(Complex64::new(num(s)?, 0.0)))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherentState {
    pub family: Family,
    pub z: Label,
    pub params: LadderCoeffs,
    /// Coefficients on |E_0⟩, |E_1⟩, … (iso) or |ε_0⟩ … |ε_{k−1}⟩ (new).
    pub coeffs: Vec<Complex64>,
    /// The leading scalar c₀, N_z, C_z or e^{−|z|²/2}.
    pub normalization: f64,
    /// Norm of the dropped tail; zero for the finite new families.
    pub truncation_tail: f64,
}

/// Squared moduli of the unnormalized coefficients, |c_n/c_lead|².
fn weight_ratio(family: Family, p: &LadderCoeffs, x: f64, n: usize) -> f64 {
    // Ratio w_{n+1}/w_n.
    let m = n as f64;
    let b = p.gap - p.k as f64;
    match family {
        Family::AocsIso => x / ((m + 1.0) * (p.gap + 1.0 + m) * (b + 1.0 + m)),
        Family::LinIso => x / (m + 1.0),
        Family::DocsNew => x * (p.gap - m - 1.0) * (p.k as f64 - m - 1.0) / (m + 1.0),
        Family::LinNew => x * (p.gap - m - 1.0) / ((m + 1.0) * (m + 1.0)),
    }
}

fn new_weights(family: Family, p: &LadderCoeffs, x: f64) -> Result<Vec<f64>> {
    // The LinNew weights carry 1/Γ(A) at j = 0; DocsNew starts at 1.
    let w0 = match family {
        Family::LinNew => 1.0 / gamma(p.gap)?,
        _ => 1.0,
    };
    let mut w = vec![w0];
    for j in 0..p.k - 1 {
        let next = w[j] * weight_ratio(family, p, x, j);
        w.push(next);
    }
    Ok(w)
}

/// Levels 0..=N needed for an iso-family state at |z| = `modulus`, with the
/// tail norm bound at that N.
pub fn required_levels(family: Family, params: &LadderCoeffs, modulus: f64) -> Result<(usize, f64)> {
    if family.subspace() == Subspace::New {
        return Ok((params.k - 1, 0.0));
    }
    let x = modulus * modulus;
    let lead = match family {
        Family::AocsIso => 1.0 / hyp0f2(params.gap + 1.0, params.gap - params.k as f64 + 1.0, x)?,
        _ => (-x).exp(),
    };
    let mut w = lead;
    let mut n = 0usize;
    loop {
        // Ratios decrease in n, so the tail past n is dominated by a
        // geometric series once the next ratio is below one.
        let r1 = weight_ratio(family, params, x, n);
        let r2 = weight_ratio(family, params, x, n + 1);
        if r2 < 1.0 {
            let tail = w * r1 / (1.0 - r2);
            if tail.sqrt() < TAIL_TOL {
                return Ok((n, tail.sqrt()));
            }
        }
        w *= r1;
        n += 1;
        if n > 100 * MAX_LEVELS {
            return Err(Error::Truncation {
                required: n,
                available: MAX_LEVELS,
            });
        }
    }
}

/// Builds the state with label z. `n_max` bounds the iso truncation.
pub fn construct(family: Family, z: Label, params: &LadderCoeffs, n_max: usize) -> Result<CoherentState> {
    let x = z.modulus * z.modulus;
    let (n, tail) = required_levels(family, params, z.modulus)?;
    if family.subspace() == Subspace::Iso && n > n_max {
        return Err(Error::Truncation {
            required: n,
            available: n_max,
        });
    }
    let (weights, normalization) = match family {
        Family::AocsIso | Family::LinIso => {
            let lead = match family {
                Family::AocsIso => {
                    1.0 / hyp0f2(params.gap + 1.0, params.gap - params.k as f64 + 1.0, x)?
                }
                _ => (-x).exp(),
            };
            let mut w = vec![lead];
            for m in 0..n {
                let next = w[m] * weight_ratio(family, params, x, m);
                w.push(next);
            }
            (w, lead.sqrt())
        }
        Family::DocsNew | Family::LinNew => {
            let raw = new_weights(family, params, x)?;
            let total: f64 = raw.iter().sum();
            let lead = 1.0 / total.sqrt();
            (raw.iter().map(|w| w / total).collect(), lead)
        }
    };
    // Phases are set from the label directly rather than by repeated
    // multiplication, which keeps rotated states exact to rounding.
    let extra = if family == Family::LinNew { FRAC_PI_2 } else { 0.0 };
    let coeffs = weights
        .iter()
        .enumerate()
        .map(|(m, w)| Complex64::from_polar(w.sqrt(), m as f64 * (z.phase + extra)))
        .collect();
    Ok(CoherentState {
        family,
        z,
        params: *params,
        coeffs,
        normalization,
        truncation_tail: tail,
    })
}

impl CoherentState {
    pub fn subspace(&self) -> Subspace {
        self.family.subspace()
    }

    pub fn level(&self, m: usize) -> Level {
        match self.subspace() {
            Subspace::Iso => Level::Iso(m),
            Subspace::New => Level::New(m),
        }
    }

    pub fn energy(&self, m: usize) -> f64 {
        self.params.energy(self.subspace(), m)
    }

    /// Lowest energy of the state's subspace.
    pub fn bottom_energy(&self) -> f64 {
        self.energy(0)
    }

    /// Σ|c|² plus the squared tail bound.
    pub fn norm_sqr(&self) -> f64 {
        let mut acc = Neumaier::default();
        for c in &self.coeffs {
            acc.add(c.norm_sqr());
        }
        acc.sum() + self.truncation_tail * self.truncation_tail
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| c.norm_sqr()).collect()
    }

    /// Closed-form ⟨H⟩.
    pub fn mean_energy(&self) -> Result<f64> {
        let p = &self.params;
        let x = self.z.modulus * self.z.modulus;
        match self.family {
            Family::LinIso => Ok(x + E0),
            Family::AocsIso => {
                let b = p.gap - p.k as f64;
                let num = hyp0f2(p.gap + 2.0, b + 2.0, x)?;
                let den = hyp0f2(p.gap + 1.0, b + 1.0, x)?;
                Ok(E0 + x / ((p.gap + 1.0) * (b + 1.0)) * num / den)
            }
            Family::DocsNew | Family::LinNew => {
                let w = new_weights(self.family, p, x)?;
                let total: f64 = w.iter().sum();
                let first: f64 = w.iter().enumerate().map(|(j, w)| j as f64 * w).sum();
                Ok(p.eps0() + first / total)
            }
        }
    }

    /// Σ|c|²·E from the coefficient vector.
    pub fn mean_energy_from_coeffs(&self) -> f64 {
        let mut acc = Neumaier::default();
        for (m, c) in self.coeffs.iter().enumerate() {
            acc.add(c.norm_sqr() * self.energy(m));
        }
        acc.sum()
    }

    /// The state at time t and the global phase e^{−iE_bottom t}.
    pub fn evolve(&self, t: f64) -> Result<(CoherentState, Complex64)> {
        let n_max = self.coeffs.len().saturating_sub(1).max(MAX_LEVELS);
        let next = construct(self.family, self.z.rotated(t), &self.params, n_max)?;
        Ok((next, Complex64::from_polar(1.0, -self.bottom_energy() * t)))
    }

    /// max_m |e^{−iE_m t}c_m − phase·c′_m| against [`CoherentState::evolve`].
    pub fn evolution_residual(&self, t: f64) -> Result<f64> {
        let (next, phase) = self.evolve(t)?;
        if next.coeffs.len() != self.coeffs.len() {
            return Err(Error::Usage("evolved state changed truncation".into()));
        }
        Ok(self
            .coeffs
            .iter()
            .zip(&next.coeffs)
            .enumerate()
            .map(|(m, (c, c2))| {
                // e^{−iE_m t} = e^{−iE_bottom t}·e^{−imt} keeps the large
                // energy phase out of the comparison.
                let direct = Complex64::from_polar(1.0, -(m as f64) * t) * c;
                (phase * direct - phase * c2).norm()
            })
            .fold(0.0, f64::max))
    }

    /// ‖(op − z)·cs‖ for the eigenstate families, with |z|·tail added as a
    /// bound on the dropped components.
    pub fn annihilation_residual(&self) -> Result<f64> {
        let down = |m: usize| -> Result<f64> {
            match self.family {
                Family::AocsIso => self.params.natural_down(Subspace::Iso, m),
                Family::LinIso => Ok((m as f64).sqrt()),
                f => Err(Error::Usage(format!("{f} states are not annihilation-operator eigenstates"))),
            }
        };
        let z = self.z.complex();
        let n = self.coeffs.len();
        let mut acc = 0.0;
        for m in 0..n {
            let lowered = if m + 1 < n {
                self.coeffs[m + 1] * down(m + 1)?
            } else {
                down(m)?;
                Complex64::new(0.0, 0.0)
            };
            acc += (lowered - z * self.coeffs[m]).norm_sqr();
        }
        Ok(acc.sqrt() + z.norm() * self.truncation_tail)
    }
}

/// ₀F₂(b₁, b₂; w) for complex w.
fn hyp0f2_complex(b1: f64, b2: f64, w: Complex64) -> Result<Complex64> {
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    for n in 0..10_000 {
        let m = n as f64;
        term *= w / ((b1 + m) * (b2 + m) * (m + 1.0));
        sum += term;
        if term.norm() <= 1e-17 * sum.norm() && m > w.norm() {
            return Ok(sum);
        }
    }
    Err(Error::NonConvergence {
        what: "complex 0F2 series",
        iterations: 10_000,
        partial: sum.norm(),
        last_increment: term.norm(),
    })
}

/// Σ_j w_j(1) · u^j over the finite new ladders, where w_j(x)/x^j are the
/// unnormalized weights.
fn new_series(family: Family, p: &LadderCoeffs, u: Complex64) -> Result<Complex64> {
    let w = new_weights(family, p, 1.0)?;
    let mut sum = Complex64::new(0.0, 0.0);
    let mut pow = Complex64::new(1.0, 0.0);
    for wj in w {
        sum += pow * wj;
        pow *= u;
    }
    Ok(sum)
}

/// Reproducing kernel ⟨z′|z⟩ in closed form: S(z̄′z)/√(S(|z′|²)S(|z|²)),
/// S being the family's normalization series.
pub fn kernel(family: Family, zp: Label, z: Label, params: &LadderCoeffs) -> Result<Complex64> {
    let (a, b) = (zp.complex(), z.complex());
    let u = a.conj() * b;
    let series = |w: Complex64| -> Result<Complex64> {
        match family {
            Family::AocsIso => hyp0f2_complex(params.gap + 1.0, params.gap - params.k as f64 + 1.0, w),
            Family::LinIso => Ok(w.exp()),
            Family::DocsNew | Family::LinNew => new_series(family, params, w),
        }
    };
    let sa = series(Complex64::new(a.norm_sqr(), 0.0))?.re;
    let sb = series(Complex64::new(b.norm_sqr(), 0.0))?.re;
    Ok(series(u)? / (sa * sb).sqrt())
}

/// Σ conj(c′)c over the common support.
pub fn coefficient_overlap(bra: &CoherentState, ket: &CoherentState) -> Complex64 {
    bra.coeffs.iter().zip(&ket.coeffs).map(|(a, b)| a.conj() * b).sum()
}

/// Partial sums of the norm series of displaced extremal states in H_iso,
/// Σ (A+1)_n (A−k+1)_n |z|^{2n} / n!, kept as log₁₀ to survive overflow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceWitness {
    pub modulus: f64,
    /// log₁₀ S_N for N = 0..=terms.
    pub log10_partial_sums: Vec<f64>,
    /// t_{n+1}/t_n for n = 0..terms.
    pub ratios: Vec<f64>,
    /// Index beyond which every ratio exceeds one.
    pub n_star: Option<usize>,
    /// First N with S_N > [`DIVERGENCE_THRESHOLD`].
    pub exceeds_at: Option<usize>,
}

pub fn divergence_witness(z: Label, params: &LadderCoeffs, terms: usize) -> DivergenceWitness {
    let x = z.modulus * z.modulus;
    let a = params.gap + 1.0;
    let b = params.gap - params.k as f64 + 1.0;
    let ratio = |n: f64| (a + n) * (b + n) * x / (n + 1.0);
    let ratios: Vec<f64> = (0..terms).map(|n| ratio(n as f64)).collect();
    // ratio(n)/x = (n+a)(n+b)/(n+1) increases once n² + 2n + a + b − ab > 0.
    let disc = 1.0 - (a + b - a * b);
    let monotone_from = if disc <= 0.0 { 0.0 } else { (-1.0 + disc.sqrt()).max(0.0).ceil() };
    let n_star = if x == 0.0 {
        None
    } else {
        let mut n = monotone_from as usize;
        while ratio(n as f64) <= 1.0 {
            n += 1;
        }
        // Below the monotone region every ratio must be checked directly.
        let mut star = n;
        while star > 0 && ratio((star - 1) as f64) > 1.0 {
            star -= 1;
        }
        Some(star)
    };
    let mut log_term = 0.0f64;
    let mut log_sum = 0.0f64;
    let mut sums = vec![0.0];
    let mut exceeds_at = None;
    for (n, r) in ratios.iter().enumerate() {
        if x == 0.0 {
            sums.push(0.0);
            continue;
        }
        log_term += r.log10();
        // log10(10^s + 10^t)
        let (hi, lo) = if log_sum > log_term { (log_sum, log_term) } else { (log_term, log_sum) };
        log_sum = hi + (1.0 + 10f64.powf(lo - hi)).log10();
        sums.push(log_sum);
        if exceeds_at.is_none() && log_sum > DIVERGENCE_THRESHOLD.log10() {
            exceeds_at = Some(n + 1);
        }
    }
    DivergenceWitness {
        modulus: z.modulus,
        log10_partial_sums: sums,
        ratios,
        n_star,
        exceeds_at,
    }
}

/// Sampled ψ(x) = Σ c·φ_level(x).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Wavefunction {
    pub xs: Vec<f64>,
    pub psi: Vec<Complex64>,
    pub density: Vec<f64>,
    /// ∫|ψ|² dx on the grid.
    pub norm: f64,
}

pub fn wavefunction(cs: &CoherentState, system: &SusySystem) -> Result<Wavefunction> {
    let sys = LadderCoeffs::from_spec(&system.spec);
    if sys.k != cs.params.k || (sys.gap - cs.params.gap).abs() > 1e-12 * sys.gap.abs().max(1.0) {
        return Err(Error::Usage(format!(
            "state parameters (k = {}, E0 - eps0 = {}) do not match the system (k = {}, E0 - eps0 = {})",
            cs.params.k, cs.params.gap, sys.k, sys.gap
        )));
    }
    let n = system.xs.len();
    let mut psi = vec![Complex64::new(0.0, 0.0); n];
    for (m, c) in cs.coeffs.iter().enumerate() {
        let state = system.state(cs.level(m)).ok_or(Error::Truncation {
            required: cs.coeffs.len() - 1,
            available: system.n_max,
        })?;
        for (p, v) in psi.iter_mut().zip(&state.values) {
            *p += c * v;
        }
    }
    let density: Vec<f64> = psi.iter().map(|p| p.norm_sqr()).collect();
    let norm = system.grid().integrate(&density);
    Ok(Wavefunction {
        xs: system.xs.clone(),
        psi,
        density,
        norm,
    })
}

/// Kernel modulus on a rectangular grid of z.
pub fn kernel_grid(
    family: Family,
    zp: Label,
    params: &LadderCoeffs,
    re: &[f64],
    im: &[f64],
) -> Result<Vec<Vec<f64>>> {
    im.iter()
        .map(|&y| {
            re.iter()
                .map(|&x| kernel(family, zp, Label::from_complex(Complex64::new(x, y)), params).map(|k| k.norm()))
                .collect()
        })
        .collect()
}

/// θ wrapped into (−π, π].
pub fn wrap_phase(theta: f64) -> f64 {
    let t = (theta + PI).rem_euclid(2.0 * PI) - PI;
    if t == -PI {
        PI
    } else {
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::ln_gamma;
    use crate::susy::SystemSpec;

    fn k4() -> LadderCoeffs {
        LadderCoeffs::from_spec(&SystemSpec::new(4, -2.8, -0.9))
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    /// Deterministic pseudo-random labels, |z| ≤ 3.
    fn labels(n: usize) -> Vec<Label> {
        let mut s = 0x2545_f491_4f6c_dd1du64;
        let mut next = move || {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 11) as f64 / (1u64 << 53) as f64
        };
        (0..n).map(|_| Label::polar(3.0 * next(), 2.0 * PI * next()).unwrap()).collect()
    }

    #[test]
    fn label_parsing() {
        let z: Label = "1.2@-2.78".parse().unwrap();
        assert_eq!((z.modulus, z.phase), (1.2, -2.78));
        let w: Label = "3,4".parse().unwrap();
        assert!((w.modulus - 5.0).abs() < 1e-15);
        assert!((w.complex() - Complex64::new(3.0, 4.0)).norm() < 1e-14);
        assert!("1.2@".parse::<Label>().is_err());
        assert!("-1@0".parse::<Label>().is_err());
        assert!("x".parse::<Label>().is_err());
    }

    #[test]
    fn family_parsing() {
        assert_eq!("lin-new".parse::<Family>().unwrap(), Family::LinNew);
        assert_eq!("AOCS_ISO".parse::<Family>().unwrap(), Family::AocsIso);
        let e = "docs-iso".parse::<Family>().unwrap_err();
        assert!(e.to_string().contains("diverges"));
    }

    #[test]
    fn zero_label_gives_extremal_state() {
        let p = k4();
        for f in Family::ALL {
            let cs = construct(f, Label::zero(), &p, MAX_LEVELS).unwrap();
            assert_eq!(cs.coeffs[0], Complex64::new(1.0, 0.0));
            assert!(cs.coeffs[1..].iter().all(|c| c.norm() == 0.0));
            assert_eq!(cs.mean_energy().unwrap(), cs.bottom_energy());
        }
    }

    #[test]
    fn lin_iso_is_poisson() {
        let z = Label::polar(1.2, -2.78).unwrap();
        let cs = construct(Family::LinIso, z, &k4(), MAX_LEVELS).unwrap();
        let p = cs.probabilities();
        assert!(rel(p[0], (-1.44f64).exp()) < 1e-14);
        let mut fact = 1.0;
        for (n, pn) in p.iter().enumerate() {
            if n > 0 {
                fact *= n as f64;
            }
            let expected = (-1.44f64).exp() * 1.44f64.powi(n as i32) / fact;
            assert!((pn - expected).abs() <= 1e-14 * expected.max(1e-300) + 1e-300, "{n}");
        }
        assert!((cs.mean_energy().unwrap() - 1.94).abs() < 1e-12);
    }

    #[test]
    fn lin_new_mean_energy_on_k4() {
        let z = Label::polar(1.5, -4.93).unwrap();
        let cs = construct(Family::LinNew, z, &k4(), MAX_LEVELS).unwrap();
        assert!((cs.mean_energy().unwrap() - (-3.64945)).abs() < 1e-5);
    }

    #[test]
    fn normalization_and_energy_identity() {
        let p = k4();
        for z in labels(25) {
            for f in Family::ALL {
                let cs = construct(f, z, &p, MAX_LEVELS).unwrap();
                assert!((cs.norm_sqr() - 1.0).abs() < 1e-10, "{f} {z}");
                let sum: f64 = cs.probabilities().iter().sum();
                assert!((sum - 1.0).abs() < 1e-10);
                let e1 = cs.mean_energy().unwrap();
                let e2 = cs.mean_energy_from_coeffs();
                assert!((e1 - e2).abs() < 1e-10 * e1.abs().max(1.0), "{f} {z}: {e1} vs {e2}");
            }
        }
    }

    #[test]
    fn aocs_coefficients_match_gamma_form() {
        // c_n = c₀ zⁿ/√n! · √(Γ(A+1)Γ(B+1)/(Γ(A+1+n)Γ(B+1+n))), via ln Γ.
        let p = k4();
        let z = Label::from_complex(Complex64::new(2.0, 1.0));
        let cs = construct(Family::AocsIso, z, &p, MAX_LEVELS).unwrap();
        let b = p.gap - 4.0;
        for (n, c) in cs.coeffs.iter().enumerate().take(12) {
            let m = n as f64;
            let ln = m * z.modulus.ln() - 0.5 * ln_gamma(m + 1.0).unwrap()
                + 0.5
                    * (ln_gamma(p.gap + 1.0).unwrap() + ln_gamma(b + 1.0).unwrap()
                        - ln_gamma(p.gap + 1.0 + m).unwrap()
                        - ln_gamma(b + 1.0 + m).unwrap());
            let expected = cs.normalization * ln.exp();
            assert!(rel(c.norm(), expected) < 1e-12, "{n}");
        }
    }

    #[test]
    fn docs_new_probabilities_are_pochhammer_products() {
        let p = k4();
        let z = Label::polar(0.8, 1.1).unwrap();
        let cs = construct(Family::DocsNew, z, &p, MAX_LEVELS).unwrap();
        let x = 0.64f64;
        let poch = |a: f64, j: usize| (0..j).map(|i| a + i as f64).product::<f64>();
        let fact = |j: usize| (1..=j).map(|i| i as f64).product::<f64>();
        let raw: Vec<f64> = (0..4)
            .map(|j| poch(p.gap - j as f64, j) * poch(4.0 - j as f64, j) * x.powi(j as i32) / fact(j))
            .collect();
        let nz2 = 1.0 / raw.iter().sum::<f64>();
        assert!(rel(cs.normalization.powi(2), nz2) < 1e-14);
        for (pj, r) in cs.probabilities().iter().zip(&raw) {
            assert!(rel(*pj, nz2 * r) < 1e-13);
        }
    }

    #[test]
    fn annihilation() {
        let p = k4();
        let z = Label::from_complex(Complex64::new(2.0, 1.0));
        let cs = construct(Family::AocsIso, z, &p, MAX_LEVELS).unwrap();
        assert!(cs.annihilation_residual().unwrap() < 1e-8);
        for z in labels(10) {
            for f in [Family::AocsIso, Family::LinIso] {
                let cs = construct(f, z, &p, MAX_LEVELS).unwrap();
                assert!(cs.annihilation_residual().unwrap() < 1e-8, "{f} {z}");
            }
        }
        let zero = construct(Family::AocsIso, Label::zero(), &p, MAX_LEVELS).unwrap();
        assert_eq!(zero.annihilation_residual().unwrap(), 0.0);
        let docs = construct(Family::DocsNew, z, &p, MAX_LEVELS).unwrap();
        assert!(matches!(docs.annihilation_residual(), Err(Error::Usage(_))));
    }

    #[test]
    fn truncation_is_reported() {
        let p = k4();
        let z = Label::polar(3.0, 0.0).unwrap();
        let err = construct(Family::LinIso, z, &p, 5).unwrap_err();
        match err {
            Error::Truncation { required, available } => {
                assert!(required > 5);
                assert_eq!(available, 5);
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn kernels_match_coefficient_overlaps() {
        let p = k4();
        let zs = labels(40);
        for pair in zs.chunks(2) {
            for f in Family::ALL {
                let a = construct(f, pair[0], &p, MAX_LEVELS).unwrap();
                let b = construct(f, pair[1], &p, MAX_LEVELS).unwrap();
                let k = kernel(f, pair[0], pair[1], &p).unwrap();
                let o = coefficient_overlap(&a, &b);
                assert!((k - o).norm() < 1e-10, "{f}: {k} vs {o}");
            }
        }
        let z = Label::polar(1.3, 0.4).unwrap();
        for f in Family::ALL {
            assert!((kernel(f, z, z, &p).unwrap() - 1.0).norm() < 1e-14);
            // ‖|z′⟩ − |z⟩‖² = 2(1 − Re⟨z′|z⟩) is second order in the step;
            // ⟨z′|z⟩ − 1 itself carries a first-order phase unless the
            // step is radial.
            let step = Complex64::from_polar(1e-3, 1.0);
            let near = Label::from_complex(z.complex() + step);
            let k = kernel(f, near, z, &p).unwrap();
            assert!(2.0 * (1.0 - k.re) < 1e-4);
            let radial = Label::polar(z.modulus + 1e-3, z.phase).unwrap();
            assert!((kernel(f, radial, z, &p).unwrap() - 1.0).norm() < 1e-4);
        }
    }

    #[test]
    fn aocs_kernel_profile() {
        // ε₀ = −2, k = 2 ⇒ A = 2.5.
        let p = LadderCoeffs::new(2.5, 2).unwrap();
        let zp = Label::from_complex(Complex64::new(5.0, 1.0));
        assert!((kernel(Family::AocsIso, zp, zp, &p).unwrap().norm() - 1.0).abs() < 1e-14);
        let mut last = 1.0;
        for i in 1..40 {
            let z = Label::from_complex(Complex64::new(5.0 + 0.25 * i as f64, 1.0));
            let v = kernel(Family::AocsIso, zp, z, &p).unwrap().norm();
            assert!(v < last, "not decaying at step {i}");
            last = v;
        }
        // The profile is not the oscillator Gaussian.
        let z = Label::from_complex(Complex64::new(7.0, 1.0));
        let aocs = kernel(Family::AocsIso, zp, z, &p).unwrap().norm();
        let gauss = kernel(Family::LinIso, zp, z, &p).unwrap().norm();
        assert!(rel(aocs, gauss) > 0.1);
    }

    #[test]
    fn evolution() {
        let p = k4();
        let mut t = 0.37;
        for z in labels(8) {
            for f in Family::ALL {
                let cs = construct(f, z, &p, MAX_LEVELS).unwrap();
                assert!(cs.evolution_residual(t).unwrap() < 1e-12, "{f} {z} t={t}");
                let (same, phase) = cs.evolve(0.0).unwrap();
                assert_eq!(phase, Complex64::new(1.0, 0.0));
                assert_eq!(same.coeffs, cs.coeffs);
                let (full, phase) = cs.evolve(2.0 * PI).unwrap();
                assert!((wrap_phase(full.z.phase) - wrap_phase(z.phase)).abs() < 1e-12);
                let expected = Complex64::from_polar(1.0, -2.0 * PI * cs.bottom_energy());
                assert!((phase - expected).norm() < 1e-12);
            }
            t += 0.91;
        }
    }

    #[test]
    fn divergence() {
        let p = k4();
        let w = divergence_witness(Label::polar(1.0, 0.3).unwrap(), &p, 200);
        let n_star = w.n_star.unwrap();
        assert!(w.ratios[n_star..].iter().all(|&r| r > 1.0));
        let at = w.exceeds_at.unwrap();
        assert!(at <= 200);
        // Direct summation oracle up to the reported index.
        let (a, b) = (p.gap + 1.0, p.gap - 3.0);
        let mut term = 1.0;
        let mut sum = 1.0;
        for n in 0..at {
            term *= (a + n as f64) * (b + n as f64) / (n as f64 + 1.0);
            sum += term;
        }
        assert!(sum > DIVERGENCE_THRESHOLD);
        assert!((w.log10_partial_sums[at] - sum.log10()).abs() < 1e-12);
        let w2 = divergence_witness(Label::polar(2.0, 0.3).unwrap(), &p, 200);
        assert!(w2.exceeds_at.unwrap() < at);
        let w0 = divergence_witness(Label::zero(), &p, 10);
        assert!(w0.log10_partial_sums.iter().all(|&s| s == 0.0));
        assert_eq!(w0.exceeds_at, None);
    }
}
