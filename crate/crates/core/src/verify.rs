//! Invariant suites over a built system.
//!
//! Every check records the measured value against its tolerance. A check
//! whose computation fails is recorded as failed with the error text.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::coherent::{
    self, construct, identity_resolution_check, kernel, wavefunction, Family, Label, MeasureFamily, MeasureFn,
    MAX_LEVELS,
};
use crate::coherent::measure::{
    MOMENT_CHECK_TOL,
};
use crate::error::{Error, Result};
use crate::ladder::{self, Direction, LadderCoeffs, OperatorStencil, Subspace};
use crate::painleve::{self, Assignment, DEFAULT_RESIDUAL_TOL};
use crate::susy::{build_system, State, SusySystem, SystemSpec};

pub const ORTHONORMALITY_TOL: f64 = 1e-6;
pub const HAMILTONIAN_TOL: f64 = 1e-4;
pub const CROSS_CHECK_TOL: f64 = 1e-5;
/// Minimum residual ratio under grid doubling.
pub const CONVERGENCE_RATIO: f64 = 8.0;
pub const LADDER_TOL: f64 = 1e-3;
pub const NORMALIZATION_TOL: f64 = 1e-10;
pub const EVOLUTION_TOL: f64 = 1e-12;
pub const ANNIHILATION_TOL: f64 = 1e-8;
pub const IDENTITY_TOL: f64 = 5e-3;
pub const WAVEFUNCTION_TOL: f64 = 1e-6;

/// Every tolerance above, by name, for report provenance.
pub const TOLERANCES: &[(&str, f64)] = &[
    ("orthonormality", ORTHONORMALITY_TOL),
    ("hamiltonian", HAMILTONIAN_TOL),
    ("painleve_residual", DEFAULT_RESIDUAL_TOL),
    ("cross_check", CROSS_CHECK_TOL),
    ("convergence_ratio", CONVERGENCE_RATIO),
    ("ladder", LADDER_TOL),
    ("normalization", NORMALIZATION_TOL),
    ("evolution", EVOLUTION_TOL),
    ("annihilation", ANNIHILATION_TOL),
    ("moment", MOMENT_CHECK_TOL),
    ("identity", IDENTITY_TOL),
    ("wavefunction", WAVEFUNCTION_TOL),
];
/// Iso states covered by the orthonormality and residual checks.
pub const CHECKED_ISO_STATES: usize = 9;
/// Highest iso level in the ladder matrix elements.
pub const LADDER_MAX_LEVEL: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Orthonormality,
    Residuals,
    Painleve,
    Ladder,
    Pha,
    Nilpotency,
    Divergence,
    Measures,
    Identity,
    Evolution,
    Coherent,
}

impl Suite {
    pub const ALL: [Suite; 11] = [
        Suite::Orthonormality,
        Suite::Residuals,
        Suite::Painleve,
        Suite::Ladder,
        Suite::Pha,
        Suite::Nilpotency,
        Suite::Divergence,
        Suite::Measures,
        Suite::Identity,
        Suite::Evolution,
        Suite::Coherent,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Orthonormality => "orthonormality",
            Suite::Residuals => "residuals",
            Suite::Painleve => "painleve",
            Suite::Ladder => "ladder",
            Suite::Pha => "pha",
            Suite::Nilpotency => "nilpotency",
            Suite::Divergence => "divergence",
            Suite::Measures => "measures",
            Suite::Identity => "identity",
            Suite::Evolution => "evolution",
            Suite::Coherent => "coherent",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s.to_ascii_lowercase())
            .ok_or_else(|| {
                let names: Vec<_> = Suite::ALL.iter().map(|s| s.name()).collect();
                Error::Usage(format!("unknown suite `{s}` (expected one of {})", names.join(", ")))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub suite: Suite,
    pub name: String,
    /// NaN when the computation failed.
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub checks: Vec<CheckResult>,
    pub passed: bool,
}

impl Report {
    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

struct Recorder {
    suite: Suite,
    checks: Vec<CheckResult>,
}

impl Recorder {
    /// value ≤ tolerance.
    fn below(&mut self, name: impl Into<String>, value: Result<f64>, tolerance: f64) {
        self.push(name.into(), value, tolerance, |v| v <= tolerance);
    }

    /// value ≥ tolerance.
    fn above(&mut self, name: impl Into<String>, value: Result<f64>, tolerance: f64) {
        self.push(name.into(), value, tolerance, |v| v >= tolerance);
    }

    fn push(&mut self, name: String, value: Result<f64>, tolerance: f64, ok: impl Fn(f64) -> bool) {
        let (value, passed, detail) = match value {
            Ok(v) => (v, ok(v), None),
            Err(e) => (f64::NAN, false, Some(e.to_string())),
        };
        self.checks.push(CheckResult {
            suite: self.suite,
            name,
            value,
            tolerance,
            passed,
            detail,
        });
    }
}

/// Labels shared by the coherent-state checks.
pub fn sample_labels() -> Vec<Label> {
    [(0.5, 0.3), (1.2, -2.78), (1.5, -4.93), (5f64.sqrt(), 0.5f64.atan()), (3.0, 1.0)]
        .into_iter()
        .map(|(r, t)| Label { modulus: r, phase: t })
        .collect()
}

/// Times used by the evolution checks.
pub const SAMPLE_TIMES: [f64; 4] = [0.37, 1.28, 2.0 * std::f64::consts::PI, 11.9];

fn checked_states(system: &SusySystem) -> Vec<&State> {
    let n = CHECKED_ISO_STATES.min(system.iso_states.len());
    system.iso_states[..n].iter().chain(&system.new_states).collect()
}

/// max |⟨φ_i|φ_j⟩ − δ_ij| over the checked states.
pub fn orthonormality_error(system: &SusySystem) -> f64 {
    let grid = system.grid();
    let states = checked_states(system);
    let mut worst = 0.0f64;
    for (i, a) in states.iter().enumerate() {
        for b in &states[i..] {
            let target = if a.level == b.level { 1.0 } else { 0.0 };
            worst = worst.max((grid.inner(&a.values, &b.values) - target).abs());
        }
    }
    worst
}

/// Max residual of the nodeless-assignment g for a spec, and its ratio
/// under grid doubling.
pub fn painleve_convergence(spec: &SystemSpec) -> Result<(f64, f64)> {
    let residual = |s: &SystemSpec| -> Result<f64> {
        let sys = build_system(s, 2)?;
        Ok(painleve::solve(&sys, Assignment::nodeless(s), 0.0)?.stats.max)
    };
    let coarse = residual(spec)?;
    let fine = residual(&spec.with_grid(spec.grid.refined()))?;
    Ok((fine, coarse / fine))
}

pub fn run(system: &SusySystem, suites: &[Suite]) -> Report {
    let mut checks = Vec::new();
    for &suite in suites {
        let mut rec = Recorder {
            suite,
            checks: Vec::new(),
        };
        run_suite(system, &mut rec);
        checks.extend(rec.checks);
    }
    let passed = checks.iter().all(|c| c.passed);
    Report { checks, passed }
}

fn run_suite(system: &SusySystem, rec: &mut Recorder) {
    let spec = system.spec;
    let params = LadderCoeffs::from_spec(&spec);
    match rec.suite {
        Suite::Orthonormality => {
            rec.below("max |<i|j> - delta_ij|", Ok(orthonormality_error(system)), ORTHONORMALITY_TOL);
        }
        Suite::Residuals => {
            for s in checked_states(system) {
                rec.below(format!("H residual {:?}", s.level), Ok(s.residual), HAMILTONIAN_TOL);
            }
        }
        Suite::Painleve => {
            let asg = Assignment::nodeless(&spec);
            match painleve::solve(system, asg, 0.0) {
                Ok(sol) => {
                    rec.below("PIV residual (nodeless)", Ok(sol.stats.max), DEFAULT_RESIDUAL_TOL);
                    let v = painleve::potential_from_g(&system.grid(), &sol.g, asg.eps1);
                    rec.below(
                        "sup |V(g) - V(W)|",
                        Ok(painleve::sup_gap(&v, &system.potential)),
                        CROSS_CHECK_TOL,
                    );
                }
                Err(e) => rec.below("PIV residual (nodeless)", Err(e), DEFAULT_RESIDUAL_TOL),
            }
            let wide = painleve::solve_with_band(
                system,
                Assignment::standard(&spec),
                0.0,
                painleve::WIDE_GUARD_BAND,
            )
            .map(|s| s.stats.max);
            rec.below("PIV residual (e1 = 1/2, wide band)", wide, DEFAULT_RESIDUAL_TOL);
            rec.above(
                "residual ratio under grid doubling",
                painleve_convergence(&spec).map(|(_, ratio)| ratio),
                CONVERGENCE_RATIO,
            );
        }
        Suite::Ladder => {
            let op = painleve::solve(system, Assignment::nodeless(&spec), 0.0)
                .and_then(|sol| OperatorStencil::build(&sol, &system.potential));
            match op {
                Ok(op) => {
                    let elements = ladder::matrix_elements(system, &op, Direction::Down, LADDER_MAX_LEVEL + 1);
                    let on = elements.as_ref().map_err(Clone::clone).map(|els| {
                        els.iter()
                            .filter(|e| e.expected != 0.0)
                            .map(|e| e.error())
                            .fold(0.0, f64::max)
                    });
                    let off = elements.map(|els| {
                        els.iter()
                            .filter(|e| e.expected == 0.0)
                            .map(|e| e.error())
                            .fold(0.0, f64::max)
                    });
                    rec.below("l- elements vs table (relative)", on, LADDER_TOL);
                    rec.below("l- off-ladder elements", off, LADDER_TOL);
                    let kern = ladder::kernel_residuals(system, &op);
                    rec.below(
                        "|l- phi_E0| (relative)",
                        kern.as_ref().map(|k| k[0]).map_err(Clone::clone),
                        LADDER_TOL,
                    );
                    rec.below("|l- phi_eps0| (relative)", kern.map(|k| k[1]), LADDER_TOL);
                }
                Err(e) => rec.below("l- elements vs table (relative)", Err(e), LADDER_TOL),
            }
            let comm = ladder::commutator_check(&params, system.n_max);
            let worst = comm
                .iso
                .iter()
                .map(|c| (c - 1.0).abs())
                .chain(
                    comm.new
                        .iter()
                        .enumerate()
                        .filter(|&(j, _)| j > 0 && j + 1 < spec.k)
                        .map(|(_, c)| (c - 1.0).abs()),
                )
                .fold(0.0, f64::max);
            rec.below("linearized [l-, l+] = 1 off boundaries", Ok(worst), 1e-12);
        }
        Suite::Pha => {
            let mut worst = 0.0f64;
            let mut err = None;
            let levels = (0..=system.n_max)
                .map(|n| (Subspace::Iso, n))
                .chain((0..spec.k).map(|j| (Subspace::New, j)));
            for (sub, n) in levels {
                match params.pha_product(sub, n) {
                    Ok((d2, p)) => worst = worst.max((d2 - p).abs() / p.abs().max(1.0)),
                    Err(e) => err = Some(e),
                }
            }
            rec.below("l+ l- = (H-1/2)(H-eps0)(H-eps_top-1)", err.map_or(Ok(worst), Err), 1e-12);
        }
        Suite::Nilpotency => {
            for k in 1..=5usize {
                let p = LadderCoeffs::from_spec(&SystemSpec::new(k, spec.eps_top, spec.nu));
                let m = p.nilpotent_matrix();
                let power = ladder::matrix_power(&m, k);
                let max = power.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max);
                rec.below(format!("(l-|H_new)^{k} (k = {k})"), Ok(max), 0.0);
                if k > 1 {
                    let below = ladder::matrix_power(&m, k - 1);
                    let max = below.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max);
                    rec.above(format!("(l-|H_new)^{} != 0 (k = {k})", k - 1), Ok(max), f64::MIN_POSITIVE);
                }
            }
        }
        Suite::Divergence => {
            let w = coherent::divergence_witness(Label { modulus: 1.0, phase: 0.0 }, &params, 200);
            let at = w
                .exceeds_at
                .map(|n| n as f64)
                .ok_or_else(|| Error::Usage("partial sums stayed below 1e6 for 200 terms".into()));
            rec.below("2F0 partial sum > 1e6 within N terms", at, 200.0);
            let tail_ok = w
                .n_star
                .map(|n| if w.ratios[n..].iter().all(|&r| r > 1.0) { 0.0 } else { 1.0 })
                .ok_or_else(|| Error::Usage("no index beyond which the term ratio exceeds one".into()));
            rec.below("term ratio > 1 beyond n*", tail_ok, 0.0);
        }
        Suite::Measures => {
            for mf in MeasureFamily::ALL {
                let m = MeasureFn::new(mf, params);
                for s in m.sample_moments() {
                    rec.below(
                        format!("{mf} Mellin moment s = {s}"),
                        m.moment_check(s).map(|c| c.rel_gap()),
                        coherent::measure::MOMENT_CHECK_TOL,
                    );
                }
                let min = (1..=100)
                    .map(|i| m.density(0.1 * i as f64))
                    .collect::<Result<Vec<_>>>()
                    .map(|v| v.into_iter().fold(f64::INFINITY, f64::min));
                rec.above(format!("{mf} min density on r in (0, 10]"), min, 0.0);
            }
        }
        Suite::Identity => {
            for (family, n_max, tol) in [
                (Family::LinIso, 10, 1e-8),
                (Family::AocsIso, LADDER_MAX_LEVEL, IDENTITY_TOL),
                (Family::DocsNew, 0, IDENTITY_TOL),
                (Family::LinNew, 0, IDENTITY_TOL),
            ] {
                rec.below(
                    format!("{family} identity resolution"),
                    identity_resolution_check(family, &params, n_max).map(|r| r.max_deviation()),
                    tol,
                );
            }
        }
        Suite::Evolution => {
            for family in Family::ALL {
                let worst = sample_labels()
                    .into_iter()
                    .flat_map(|z| SAMPLE_TIMES.map(move |t| (z, t)))
                    .map(|(z, t)| construct(family, z, &params, MAX_LEVELS)?.evolution_residual(t))
                    .collect::<Result<Vec<_>>>()
                    .map(|v| v.into_iter().fold(0.0, f64::max));
                rec.below(format!("{family} phase identity"), worst, EVOLUTION_TOL);
            }
        }
        Suite::Coherent => coherent_suite(system, &params, rec),
    }
}

fn coherent_suite(system: &SusySystem, params: &LadderCoeffs, rec: &mut Recorder) {
    let labels = sample_labels();
    for family in Family::ALL {
        let states = labels
            .iter()
            .map(|&z| construct(family, z, params, MAX_LEVELS))
            .collect::<Result<Vec<_>>>();
        let states = match states {
            Ok(s) => s,
            Err(e) => {
                rec.below(format!("{family} construction"), Err(e), 0.0);
                continue;
            }
        };
        let norm = states.iter().map(|s| (s.norm_sqr() - 1.0).abs()).fold(0.0, f64::max);
        rec.below(format!("{family} |norm - 1|"), Ok(norm), NORMALIZATION_TOL);
        let psum = states
            .iter()
            .map(|s| (s.probabilities().iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max);
        rec.below(format!("{family} |sum p - 1|"), Ok(psum), NORMALIZATION_TOL);
        let energy = states
            .iter()
            .map(|s| s.mean_energy().map(|e| (e - s.mean_energy_from_coeffs()).abs() / e.abs().max(1.0)))
            .collect::<Result<Vec<_>>>()
            .map(|v| v.into_iter().fold(0.0, f64::max));
        rec.below(format!("{family} <H> closed form vs sum p E"), energy, NORMALIZATION_TOL);
        let kern = states
            .windows(2)
            .map(|w| {
                kernel(family, w[0].z, w[1].z, params).map(|k| (k - coherent::coefficient_overlap(&w[0], &w[1])).norm())
            })
            .collect::<Result<Vec<_>>>()
            .map(|v| v.into_iter().fold(0.0, f64::max));
        rec.below(format!("{family} kernel vs coefficient overlap"), kern, NORMALIZATION_TOL);
        if matches!(family, Family::AocsIso | Family::LinIso) {
            let ann = states
                .iter()
                .map(|s| s.annihilation_residual())
                .collect::<Result<Vec<_>>>()
                .map(|v| v.into_iter().fold(0.0, f64::max));
            rec.below(format!("{family} annihilation residual"), ann, ANNIHILATION_TOL);
        }
        let fits: Vec<_> = states
            .iter()
            .filter(|s| s.coeffs.len() <= system.n_max + 1 || s.subspace() == Subspace::New)
            .collect();
        let wf = fits
            .iter()
            .map(|s| wavefunction(s, system).map(|w| (w.norm - 1.0).abs()))
            .collect::<Result<Vec<_>>>()
            .map(|v| v.into_iter().fold(0.0, f64::max));
        rec.below(format!("{family} |int |psi|^2 - 1|"), wf, WAVEFUNCTION_TOL);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::susy::DEFAULT_N_MAX;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("bogus".parse::<Suite>().is_err());
    }

    #[test]
    fn fast_suites_pass_on_k1() {
        let sys = build_system(&SystemSpec::new(1, -1.0, 0.5), DEFAULT_N_MAX).unwrap();
        let report = run(
            &sys,
            &[
                Suite::Orthonormality,
                Suite::Residuals,
                Suite::Pha,
                Suite::Nilpotency,
                Suite::Divergence,
                Suite::Evolution,
                Suite::Coherent,
            ],
        );
        let failures: Vec<_> = report.failures().collect();
        assert!(report.passed, "{failures:#?}");
    }
}
