//! Third-order ladder operators l_k^± of H_k.
//!
//! Two realizations are kept side by side: the coefficient tables of their
//! action on both ladders of eigenstates, and explicit differential
//! operators l⁺ = L_a⁺L_b⁺ rebuilt from a Painlevé IV solution g(x),
//!
//! L_a⁺ = (−d + f)/√2,  L_b⁺ = ½(d² + g d + h),
//! f = g + x,  h = g′/2 − g²/2 − 2xg − x² + a,
//!
//! with l⁻ the formal adjoint L_b⁻L_a⁻. The linearized operators
//! ℓ⁺ = σ(H)l⁺, ℓ⁻ = σ(H+1)l⁻, σ(H) = [(H−ε₀)(H−ε₀−k)]^{−1/2}, are only
//! realized as tables.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{self, Grid};
use crate::painleve::PainleveSolution;
use crate::susy::{Level, State, SusySystem, SystemSpec};
use crate::E0;

/// Samples excluded at each grid edge in matrix-element quadrature.
pub const BOUNDARY_BAND: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subspace {
    Iso,
    New,
}

impl fmt::Display for Subspace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Subspace::Iso => "iso",
            Subspace::New => "new",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Up,
    Down,
}

/// Phase of a linearized coefficient. On H_new the radicands ε_j − E₀ are
/// negative and the coefficient is i·√(E₀ − ε_j).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Real,
    Imaginary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearCoeff {
    pub magnitude: f64,
    pub phase: Phase,
    /// The signed radicand, so that products of coefficients stay exact.
    pub square: f64,
}

impl LinearCoeff {
    fn from_square(square: f64) -> Self {
        Self {
            magnitude: square.abs().sqrt(),
            phase: if square < 0.0 { Phase::Imaginary } else { Phase::Real },
            square,
        }
    }

    pub fn value(&self) -> Complex64 {
        match self.phase {
            Phase::Real => Complex64::new(self.magnitude, 0.0),
            Phase::Imaginary => Complex64::new(0.0, self.magnitude),
        }
    }
}

/// Parameters shared by both ladders: the gap A = E₀ − ε₀ and the order k.
/// In these units E_n − E₀ = n and ε_j − ε₀ = j.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LadderCoeffs {
    pub gap: f64,
    pub k: usize,
}

impl LadderCoeffs {
    pub fn new(gap: f64, k: usize) -> Result<Self> {
        // ε_{k−1} < E₀ is the same as A > k − 1.
        if k == 0 || !(gap > k as f64 - 1.0) || !gap.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "ladder parameters need k ≥ 1 and E0 - eps0 > k - 1, got k = {k}, E0 - eps0 = {gap}"
            )));
        }
        Ok(Self { gap, k })
    }

    pub fn from_spec(spec: &SystemSpec) -> Self {
        Self {
            gap: spec.gap(),
            k: spec.k,
        }
    }

    pub fn eps0(&self) -> f64 {
        E0 - self.gap
    }

    /// Energy of a basis state.
    pub fn energy(&self, sub: Subspace, level: usize) -> f64 {
        match sub {
            Subspace::Iso => E0 + level as f64,
            Subspace::New => self.eps0() + level as f64,
        }
    }

    fn check_level(&self, sub: Subspace, level: usize) -> Result<()> {
        if sub == Subspace::New && level >= self.k {
            return Err(Error::Usage(format!("new-ladder index {level} out of range 0..{}", self.k)));
        }
        Ok(())
    }

    /// (E−E₀)(E−ε₀)(E−ε₀−k) at the level's energy.
    pub fn radicand(&self, sub: Subspace, level: usize) -> f64 {
        let n = level as f64;
        let k = self.k as f64;
        match sub {
            Subspace::Iso => n * (n + self.gap) * (n + self.gap - k),
            Subspace::New => (n - self.gap) * n * (n - k),
        }
    }

    /// Coefficient of l⁻ from `level` to `level − 1` (zero at both ladder
    /// bottoms).
    pub fn natural_down(&self, sub: Subspace, level: usize) -> Result<f64> {
        self.check_level(sub, level)?;
        let r = self.radicand(sub, level);
        if r < 0.0 {
            return Err(Error::domain(
                "natural_down",
                format!("negative radicand {r} at {sub} level {level}"),
            ));
        }
        Ok(r.sqrt())
    }

    /// Coefficient of l⁺ from `level` to `level + 1`; zero at the top of
    /// the new ladder.
    pub fn natural_up(&self, sub: Subspace, level: usize) -> Result<f64> {
        self.check_level(sub, level)?;
        if sub == Subspace::New && level + 1 == self.k {
            return Ok(0.0);
        }
        self.natural_down(sub, level + 1)
    }

    /// (d², (E−½)(E−ε₀)(E−ε_{k−1}−1)) at the level: l⁺l⁻ on the state
    /// against the ladder product.
    pub fn pha_product(&self, sub: Subspace, level: usize) -> Result<(f64, f64)> {
        let d = self.natural_down(sub, level)?;
        let e = self.energy(sub, level);
        let eps0 = self.eps0();
        let top = eps0 + self.k as f64 - 1.0;
        Ok((d * d, (e - E0) * (e - eps0) * (e - top - 1.0)))
    }

    /// Linearized coefficient: √n down and √(n+1) up on H_iso, and
    /// √(ε_j − E₀) down, √(ε_{j+1} − E₀) up on H_new with the boundary
    /// Kronecker factors.
    pub fn linearized(&self, dir: Direction, sub: Subspace, level: usize) -> Result<LinearCoeff> {
        self.check_level(sub, level)?;
        let n = level as f64;
        let square = match (sub, dir) {
            (Subspace::Iso, Direction::Down) => n,
            (Subspace::Iso, Direction::Up) => n + 1.0,
            (Subspace::New, Direction::Down) if level == 0 => 0.0,
            (Subspace::New, Direction::Down) => n - self.gap,
            (Subspace::New, Direction::Up) if level + 1 == self.k => 0.0,
            (Subspace::New, Direction::Up) => n + 1.0 - self.gap,
        };
        let mut c = LinearCoeff::from_square(square);
        if sub == Subspace::New {
            c.phase = Phase::Imaginary;
        }
        Ok(c)
    }

    /// Diagonal of N = ℓ⁺ℓ⁻ on a basis state.
    pub fn number(&self, sub: Subspace, level: usize) -> Result<f64> {
        Ok(self.linearized(Direction::Down, sub, level)?.square)
    }

    /// Diagonal of [ℓ⁻, ℓ⁺] on a basis state, from the linearized table.
    pub fn commutator(&self, sub: Subspace, level: usize) -> Result<f64> {
        let up = self.linearized(Direction::Up, sub, level)?;
        let down = self.linearized(Direction::Down, sub, level)?;
        // ℓ⁻ℓ⁺|m⟩ uses the down coefficient of m+1, which equals the up
        // coefficient of m; likewise ℓ⁺ℓ⁻|m⟩ uses up(m−1) = down(m). The
        // product of a coefficient with itself is its signed radicand.
        Ok(up.square - down.square)
    }

    /// The k×k matrix of l⁻ on H_new in the basis |ε_0⟩..|ε_{k−1}⟩.
    pub fn nilpotent_matrix(&self) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; self.k]; self.k];
        for j in 1..self.k {
            m[j - 1][j] = self.natural_down(Subspace::New, j).expect("level in range");
        }
        m
    }
}

/// Plain matrix product.
pub fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let m = b.first().map_or(0, Vec::len);
    let mut out = vec![vec![0.0; m]; n];
    for i in 0..n {
        for (l, bl) in b.iter().enumerate() {
            let ail = a[i][l];
            if ail != 0.0 {
                for j in 0..m {
                    out[i][j] += ail * bl[j];
                }
            }
        }
    }
    out
}

pub fn matrix_power(m: &[Vec<f64>], p: usize) -> Vec<Vec<f64>> {
    let n = m.len();
    let mut out: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    for _ in 0..p {
        out = matmul(&out, m);
    }
    out
}

/// Commutator diagonals: `iso[n]` for n = 0..n_iso and `new[j]` for the
/// whole new ladder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommutatorReport {
    pub iso: Vec<f64>,
    pub new: Vec<f64>,
}

pub fn commutator_check(params: &LadderCoeffs, n_iso: usize) -> CommutatorReport {
    let iso = (0..n_iso).map(|n| params.commutator(Subspace::Iso, n).expect("iso in range")).collect();
    let new = (0..params.k).map(|j| params.commutator(Subspace::New, j).expect("new in range")).collect();
    CommutatorReport { iso, new }
}

/// Sampled coefficient functions of l⁺ = L_a⁺L_b⁺ and its adjoint, together
/// with the potential used to reduce φ″ and φ‴ on eigenstates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorStencil {
    pub grid: Grid,
    pub a: f64,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub h: Vec<f64>,
    pub dg: Vec<f64>,
    pub ddg: Vec<f64>,
    pub dh: Vec<f64>,
    pub potential: Vec<f64>,
    pub dpotential: Vec<f64>,
}

impl OperatorStencil {
    /// Builds the coefficient functions from samples of g (NaN where
    /// masked). Derivatives of g, h and V use 5-point stencils.
    pub fn from_g(grid: Grid, g: &[f64], a: f64, potential: &[f64]) -> Result<Self> {
        let hstep = grid.step();
        let xs = grid.points();
        let dg = grid::d1(g, hstep);
        let ddg = grid::d2(g, hstep);
        let f: Vec<f64> = g.iter().zip(&xs).map(|(g, x)| g + x).collect();
        let h: Vec<f64> = (0..g.len())
            .map(|i| {
                let (x, gi) = (xs[i], g[i]);
                0.5 * dg[i] - 0.5 * gi * gi - 2.0 * x * gi - x * x + a
            })
            .collect();
        let dh = grid::d1(&h, hstep);
        let dpotential = grid::d1(potential, hstep);
        let n = g.len();
        let interior = n - 2 * BOUNDARY_BAND;
        let usable = (BOUNDARY_BAND..n - BOUNDARY_BAND).filter(|&i| dh[i].is_finite() && ddg[i].is_finite()).count();
        if 2 * usable < interior {
            return Err(Error::InsufficientSupport {
                evaluable: usable,
                total: interior,
            });
        }
        Ok(Self {
            grid,
            a,
            f,
            g: g.to_vec(),
            h,
            dg,
            ddg,
            dh,
            potential: potential.to_vec(),
            dpotential,
        })
    }

    /// Coefficient functions for the assignment of `solution` acting on
    /// states of H_k with potential `potential`.
    pub fn build(solution: &PainleveSolution, potential: &[f64]) -> Result<Self> {
        Self::from_g(solution.grid, &solution.g, solution.assignment.a(), potential)
    }

    /// l^± applied to an eigenfunction of H_k at `energy`. Higher
    /// derivatives come from φ″ = 2(V−E)φ and φ‴ = 2V′φ + 2(V−E)φ′; φ′ is
    /// taken from `derivs` or, if absent, from the 5-point stencil.
    pub fn apply(&self, dir: Direction, values: &[f64], derivs: Option<&[f64]>, energy: f64) -> Vec<f64> {
        let stencil;
        let dphi = match derivs {
            Some(d) => d,
            None => {
                stencil = grid::d1(values, self.grid.step());
                &stencil
            }
        };
        (0..values.len())
            .map(|i| {
                let (p, dp) = (values[i], dphi[i]);
                let w = 2.0 * (self.potential[i] - energy);
                let ddp = w * p;
                let dddp = 2.0 * self.dpotential[i] * p + w * dp;
                let (f, g, h) = (self.f[i], self.g[i], self.h[i]);
                let (dg, ddg, dh) = (self.dg[i], self.ddg[i], self.dh[i]);
                let df = 1.0 + dg;
                match dir {
                    Direction::Down => {
                        let psi = FRAC_1_SQRT_2 * (dp + f * p);
                        let dpsi = FRAC_1_SQRT_2 * (ddp + df * p + f * dp);
                        let ddpsi = FRAC_1_SQRT_2 * (dddp + ddg * p + 2.0 * df * dp + f * ddp);
                        0.5 * (ddpsi - g * dpsi + (h - dg) * psi)
                    }
                    Direction::Up => {
                        let chi = 0.5 * (ddp + g * dp + h * p);
                        let dchi = 0.5 * (dddp + dg * dp + g * ddp + dh * p + h * dp);
                        FRAC_1_SQRT_2 * (-dchi + f * chi)
                    }
                }
            })
            .collect()
    }

    pub fn apply_state(&self, dir: Direction, state: &State) -> Vec<f64> {
        self.apply(dir, &state.values, Some(&state.derivs), state.energy)
    }

    /// ∫ bra · image over the grid minus the boundary band; non-finite
    /// samples are dropped.
    pub fn overlap(&self, bra: &[f64], image: &[f64]) -> f64 {
        let n = bra.len();
        let prod: Vec<f64> = (BOUNDARY_BAND..n - BOUNDARY_BAND)
            .map(|i| {
                let v = bra[i] * image[i];
                if v.is_finite() {
                    v
                } else {
                    0.0
                }
            })
            .collect();
        grid::simpson_window(&prod, self.grid.step(), 0, prod.len() - 1)
    }

    /// L² norm of an image over the same window.
    pub fn image_norm(&self, image: &[f64]) -> f64 {
        self.overlap(image, image).sqrt()
    }
}

/// One matrix element ⟨bra| l |ket⟩ against the coefficient table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElementCheck {
    pub direction: Direction,
    pub bra: Level,
    pub ket: Level,
    pub computed: f64,
    pub expected: f64,
}

impl ElementCheck {
    /// Relative gap of magnitudes for on-ladder elements (the sign follows
    /// the state phase convention), absolute value otherwise.
    pub fn error(&self) -> f64 {
        if self.expected == 0.0 {
            self.computed.abs()
        } else {
            (self.computed.abs() - self.expected).abs() / self.expected
        }
    }
}

fn level_parts(level: Level) -> (Subspace, usize) {
    match level {
        Level::Iso(n) => (Subspace::Iso, n),
        Level::New(j) => (Subspace::New, j),
    }
}

/// All matrix elements ⟨m|l^±|n⟩ between the first `n_iso` iso states and
/// all new states, each with its table value.
pub fn matrix_elements(
    system: &SusySystem,
    op: &OperatorStencil,
    dir: Direction,
    n_iso: usize,
) -> Result<Vec<ElementCheck>> {
    let params = LadderCoeffs::from_spec(&system.spec);
    let n_iso = n_iso.min(system.iso_states.len());
    let states: Vec<&State> = system.iso_states[..n_iso].iter().chain(&system.new_states).collect();
    let mut out = Vec::new();
    for ket in &states {
        let image = op.apply_state(dir, ket);
        let (ks, kn) = level_parts(ket.level);
        for bra in &states {
            let (bs, bn) = level_parts(bra.level);
            let expected = match dir {
                Direction::Down if bs == ks && bn + 1 == kn => params.natural_down(ks, kn)?,
                Direction::Up if bs == ks && kn + 1 == bn => params.natural_up(ks, kn)?,
                _ => 0.0,
            };
            out.push(ElementCheck {
                direction: dir,
                bra: bra.level,
                ket: ket.level,
                computed: op.overlap(&bra.values, &image),
                expected,
            });
        }
    }
    Ok(out)
}

/// ‖l⁻φ‖ for the two ladder bottoms, relative to the first nonzero table
/// coefficient of the same ladder (d₁ on H_iso, e₁ on H_new or d₁ if k = 1).
pub fn kernel_residuals(system: &SusySystem, op: &OperatorStencil) -> Result<[f64; 2]> {
    let params = LadderCoeffs::from_spec(&system.spec);
    let d1 = params.natural_down(Subspace::Iso, 1)?;
    let e1 = if params.k > 1 { params.natural_down(Subspace::New, 1)? } else { d1 };
    let iso = op.image_norm(&op.apply_state(Direction::Down, &system.iso_states[0])) / d1;
    let new = op.image_norm(&op.apply_state(Direction::Down, &system.new_states[0])) / e1;
    Ok([iso, new])
}
