//! Radial measures resolving the identity on each subspace.
//!
//! With x = r², every density f is fixed by its Mellin transform:
//!
//! - μ₁ (AOCS on H_iso): Γ(A+s)Γ(A−k+s)Γ(s);
//! - μ₂ (DOCS on H_new): Γ(k+1−s)Γ(A+1−s)Γ(s);
//! - μ₃ (linearized CS on H_new): Γ²(s)Γ(A+1−s).
//!
//! f₁ and f₂ are evaluated as Mellin convolutions f(x) = ∫₀^∞ g(u)e^{−x/u}du/u
//! of a positive Bessel-K kernel g against e^{−t}, which makes positivity
//! manifest. f₃ is Γ²(A+1)·U(A+1, 1; x).

use std::cell::RefCell;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::Family;
use crate::error::{Error, Result};
use crate::ladder::LadderCoeffs;
use crate::specfun::quadrature::integrate_semi_infinite;
use crate::specfun::{gamma, ln_bessel_k_tol, ln_gamma, mellin_moment, tricomi_u_tol};

/// Relative tolerance of the outer convolution integral.
pub const DEFAULT_TOL: f64 = 1e-6;

/// Relative tolerance of the Mellin moment quadrature.
pub const MOMENT_TOL: f64 = 1e-6;

/// Relative tolerance of the moment and identity checks.
pub const MOMENT_CHECK_TOL: f64 = 1e-3;

/// Below this x, f₃ follows its logarithmic leading term.
const SMALL_X: f64 = 1e-60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasureFamily {
    Mu1,
    Mu2,
    Mu3,
}

impl MeasureFamily {
    pub const ALL: [MeasureFamily; 3] = [MeasureFamily::Mu1, MeasureFamily::Mu2, MeasureFamily::Mu3];

    /// Measure resolving the identity for a coherent-state family; the
    /// Gaussian of `LinIso` has none here.
    pub fn for_family(family: Family) -> Option<Self> {
        match family {
            Family::AocsIso => Some(MeasureFamily::Mu1),
            Family::DocsNew => Some(MeasureFamily::Mu2),
            Family::LinNew => Some(MeasureFamily::Mu3),
            Family::LinIso => None,
        }
    }
}

impl fmt::Display for MeasureFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MeasureFamily::Mu1 => "mu1",
            MeasureFamily::Mu2 => "mu2",
            MeasureFamily::Mu3 => "mu3",
        })
    }
}

impl FromStr for MeasureFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mu1" | "f1" | "1" => Ok(MeasureFamily::Mu1),
            "mu2" | "f2" | "2" => Ok(MeasureFamily::Mu2),
            "mu3" | "f3" | "3" => Ok(MeasureFamily::Mu3),
            other => Err(Error::Usage(format!("unknown measure `{other}` (expected mu1, mu2 or mu3)"))),
        }
    }
}

/// Integral representation used for the K_ν in the μ₂ kernel. K_ν = K_{−ν},
/// and the representation ∫₁^∞ e^{−wp}(p²−1)^{ν−½}dp needs ν > −½, so the
/// order A−k is used directly when A−k > −½ and reflected otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mu2Branch {
    Direct,
    Reflected,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureFn {
    pub family: MeasureFamily,
    pub params: LadderCoeffs,
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentCheck {
    pub s: f64,
    pub computed: f64,
    pub expected: f64,
}

impl MomentCheck {
    pub fn rel_gap(&self) -> f64 {
        (self.computed - self.expected).abs() / self.expected.abs()
    }
}

impl MeasureFn {
    pub fn new(family: MeasureFamily, params: LadderCoeffs) -> Self {
        Self {
            family,
            params,
            tol: DEFAULT_TOL,
        }
    }

    /// Relative tolerance of the quadratures behind `f`.
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    fn a(&self) -> f64 {
        self.params.gap
    }

    fn b(&self) -> f64 {
        self.params.gap - self.params.k as f64
    }

    /// Open convergence strip (lo, hi) of the Mellin transform.
    pub fn strip(&self) -> (f64, f64) {
        let (a, b, k) = (self.a(), self.b(), self.params.k as f64);
        match self.family {
            MeasureFamily::Mu1 => ((-b).max(0.0), f64::INFINITY),
            MeasureFamily::Mu2 => (0.0, 1.0 + k.min(a)),
            MeasureFamily::Mu3 => (0.0, a + 1.0),
        }
    }

    /// Three interior points at ¼, ½, ¾ of the strip (capped at width 4).
    pub fn sample_moments(&self) -> [f64; 3] {
        let (lo, hi) = self.strip();
        let w = (hi - lo).min(4.0);
        [lo + 0.25 * w, lo + 0.5 * w, lo + 0.75 * w]
    }

    pub fn mu2_branch(&self) -> Mu2Branch {
        if self.b() + 0.5 > 0.0 {
            Mu2Branch::Direct
        } else {
            Mu2Branch::Reflected
        }
    }

    /// Positive kernel g with Mellin transform Γ(A+s)Γ(A−k+s) (μ₁) or
    /// Γ(k+1−s)Γ(A+1−s) (μ₂).
    fn kernel(&self, u: f64) -> Result<f64> {
        let (a, b, k) = (self.a(), self.b(), self.params.k as f64);
        let inner = (self.tol * 1e-3).max(1e-12);
        match self.family {
            // 2u^{(a+b)/2} K_{a−b}(2√u)
            MeasureFamily::Mu1 => {
                let ln_k = ln_bessel_k_tol(k, 2.0 * u.sqrt(), inner)?;
                Ok(2.0 * (0.5 * (a + b) * u.ln() + ln_k).exp())
            }
            // 2u^{−(A+k+2)/2} K_ν(2/√u), ν = ±(A−k)
            MeasureFamily::Mu2 => {
                let nu = match self.mu2_branch() {
                    Mu2Branch::Direct => b,
                    Mu2Branch::Reflected => -b,
                };
                let ln_k = ln_bessel_k_tol(nu, 2.0 / u.sqrt(), inner)?;
                Ok(2.0 * (-0.5 * (a + k + 2.0) * u.ln() + ln_k).exp())
            }
            MeasureFamily::Mu3 => unreachable!("f3 is evaluated in closed form"),
        }
    }

    /// f at the Mellin variable x = r².
    pub fn f(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) || !x.is_finite() {
            return Err(Error::domain("measure density", format!("x = {x} must be positive")));
        }
        match self.family {
            MeasureFamily::Mu3 => {
                let a1 = self.a() + 1.0;
                // U(a,1;x) = (−ln x + const)/Γ(a) + O(x ln x) below the
                // anchor, where the quadrature window no longer reaches.
                let anchor = x.max(SMALL_X);
                let u = tricomi_u_tol(a1, anchor, self.tol * 1e-3)?;
                let log_shift = (anchor / x).ln() / gamma(a1)?;
                Ok((2.0 * ln_gamma(a1)?).exp() * (u + log_shift))
            }
            _ => {
                // u = c·v. The μ₂ kernel is algebraic at large u, so its
                // mass follows u ~ x; the μ₁ kernel decays like e^{−2√u}.
                let c = match self.family {
                    MeasureFamily::Mu2 => x.max(1.0),
                    _ => 1.0,
                };
                let err = RefCell::new(None);
                let est = integrate_semi_infinite(
                    |v| {
                        let u = c * v;
                        let damp = -x / u;
                        if damp < -745.0 {
                            return 0.0;
                        }
                        match self.kernel(u) {
                            Ok(g) => g * damp.exp() / v,
                            Err(e) => {
                                err.borrow_mut().get_or_insert(e);
                                0.0
                            }
                        }
                    },
                    self.tol,
                    0.0,
                );
                if let Some(e) = err.into_inner() {
                    return Err(e);
                }
                let est = est?;
                Ok(est.value)
            }
        }
    }

    /// Density f(r²) at radius r > 0.
    pub fn density(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::domain("measure density", format!("radius r = {r} must be positive")));
        }
        self.f(r * r)
    }

    /// f₃ from Γ(A+1)∫₀^∞ t^A (t+x)^{−A−1} e^{−t} dt, the manifestly
    /// positive form.
    pub fn f3_integral(&self, x: f64) -> Result<f64> {
        let a = self.a();
        let est = integrate_semi_infinite(
            |t| (a * t.ln() - (a + 1.0) * (t + x).ln() - t).exp(),
            self.tol,
            0.0,
        )?;
        Ok(gamma(a + 1.0)? * est.value)
    }

    /// Γ-product right-hand side of the moment condition.
    pub fn expected_moment(&self, s: f64) -> Result<f64> {
        self.check_strip(s)?;
        let (a, b, k) = (self.a(), self.b(), self.params.k as f64);
        let ln = match self.family {
            MeasureFamily::Mu1 => ln_gamma(a + s)? + ln_gamma(b + s)? + ln_gamma(s)?,
            MeasureFamily::Mu2 => ln_gamma(k + 1.0 - s)? + ln_gamma(a + 1.0 - s)? + ln_gamma(s)?,
            MeasureFamily::Mu3 => 2.0 * ln_gamma(s)? + ln_gamma(a + 1.0 - s)?,
        };
        Ok(ln.exp())
    }

    fn check_strip(&self, s: f64) -> Result<()> {
        let (lo, hi) = self.strip();
        if !(s > lo && s < hi) {
            return Err(Error::domain(
                "moment_check",
                format!("s = {s} outside the convergence strip ({lo}, {hi}) of {}", self.family),
            ));
        }
        Ok(())
    }

    /// ∫₀^∞ x^{s−1} f(x) dx by quadrature against the Γ-product.
    pub fn moment_check(&self, s: f64) -> Result<MomentCheck> {
        let expected = self.expected_moment(s)?;
        let err = RefCell::new(None);
        let est = mellin_moment(
            |x| match self.f(x) {
                Ok(v) => v,
                Err(e) => {
                    err.borrow_mut().get_or_insert(e);
                    0.0
                }
            },
            s,
            MOMENT_TOL,
        );
        if let Some(e) = err.into_inner() {
            return Err(e);
        }
        let est = est?;
        Ok(MomentCheck {
            s,
            computed: est.value,
            expected,
        })
    }
}

/// Per-level deviations of the identity-resolution moment conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub family: Family,
    pub deviations: Vec<f64>,
}

impl IdentityReport {
    pub fn max_deviation(&self) -> f64 {
        self.deviations.iter().copied().fold(0.0, f64::max)
    }
}

/// After the angular integration, ∫|z⟩⟨z|μ = 1 on the subspace reduces to
/// one radial moment per basis state; each deviation is |moment/target − 1|.
/// Iso families check levels 0..=n_max, new families all k levels.
pub fn identity_resolution_check(family: Family, params: &LadderCoeffs, n_max: usize) -> Result<IdentityReport> {
    let levels = match family.subspace() {
        crate::ladder::Subspace::Iso => n_max + 1,
        crate::ladder::Subspace::New => params.k,
    };
    let deviations = (0..levels)
        .map(|n| -> Result<f64> {
            let s = n as f64 + 1.0;
            let (computed, target) = match MeasureFamily::for_family(family) {
                // Gaussian measure e^{−|z|²}/π: ∫x^n e^{−x}dx = n!.
                None => {
                    let est = mellin_moment(|x| (-x).exp(), s, 1e-12)?;
                    (est.value, gamma(s)?)
                }
                Some(mf) => {
                    let m = MeasureFn::new(mf, *params);
                    let check = m.moment_check(s)?;
                    (check.computed, check.expected)
                }
            };
            Ok((computed / target - 1.0).abs())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(IdentityReport { family, deviations })
}

/// Radial table (r, f(r²)) on `count` points of (0, r_max].
pub fn density_table(m: &MeasureFn, r_max: f64, count: usize) -> Result<Vec<(f64, f64)>> {
    (1..=count)
        .map(|i| {
            let r = r_max * i as f64 / count as f64;
            m.density(r).map(|v| (r, v))
        })
        .collect()
}
