//! k-th order SUSY partners of the harmonic oscillator whose seeds are tied
//! together by the annihilation operator, so that H_k carries third-order
//! ladder operators.
//!
//! Only three numbers are free: the order k, the energy ε_{k−1} of the
//! highest new level and the mixing parameter ν of the top seed. The
//! remaining seeds are u_{k−1−j} = (a⁻)^j u_{k−1} at energies ε_{k−1} − j.

mod seed;
mod states;
pub mod wronskian;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use seed::{build_seed_chain, lower, seed_solution, SeedFamily};
pub use states::{
    hamiltonian_residual, oscillator_eigenstate, oscillator_pair, Level, State, CRUM_NORM_TOL,
    NEW_STATE_RESIDUAL_TOL,
};

use self::states::CrumContext;
use self::wronskian::{check_nodeless, wronskian_with_derivatives_dd, Column, DerivativeRule};
use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::E0;

/// Default truncation of the isospectral ladder.
pub const DEFAULT_N_MAX: usize = 32;

/// Largest supported SUSY order.
pub const MAX_K: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub k: usize,
    /// ε_{k−1}, the highest new level.
    pub eps_top: f64,
    /// ν_{k−1}, the odd-part weight of the top seed.
    pub nu: f64,
    pub grid: Grid,
}

impl SystemSpec {
    pub fn new(k: usize, eps_top: f64, nu: f64) -> Self {
        Self {
            k,
            eps_top,
            nu,
            grid: Grid::default(),
        }
    }

    pub fn with_grid(mut self, grid: Grid) -> Self {
        self.grid = grid;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k > MAX_K {
            return Err(Error::InvalidSpec(format!("k = {} must lie in 1..={MAX_K}", self.k)));
        }
        if !(self.eps_top < E0) || !self.eps_top.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "eps_top = {} violates ε_(k-1) < E0 = 1/2",
                self.eps_top
            )));
        }
        if !(self.nu.abs() < 1.0) {
            return Err(Error::InvalidSpec(format!("nu = {} violates |ν| < 1", self.nu)));
        }
        self.grid.validate()
    }

    /// ε_j = ε_{k−1} − (k−1−j).
    pub fn eps(&self, j: usize) -> f64 {
        self.eps_top - (self.k - 1 - j) as f64
    }

    pub fn eps0(&self) -> f64 {
        self.eps(0)
    }

    pub fn energies(&self) -> Vec<f64> {
        (0..self.k).map(|j| self.eps(j)).collect()
    }

    /// E₀ − ε₀, the gap between the bottoms of the two ladders.
    pub fn gap(&self) -> f64 {
        E0 - self.eps0()
    }
}

/// Sampled Wronskian of the seed chain and its first two derivatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WronskianSamples {
    pub w: Vec<f64>,
    pub dw: Vec<f64>,
    pub d2w: Vec<f64>,
    /// Double-double (W, W′) used by the state ratios.
    #[serde(skip)]
    pub(crate) exact: Vec<(Dd, Dd)>,
    /// V_k − x²/2 formed before rounding.
    #[serde(skip)]
    pub(crate) log_curvature: Vec<f64>,
}

fn rules_for(seeds: &SeedFamily) -> Vec<DerivativeRule> {
    let k = seeds.k();
    (0..k).map(|j| DerivativeRule::new_dd(seeds.energy_dd(j), k + 1)).collect()
}

fn columns<'a>(rules: &'a [DerivativeRule], vals: &[(Dd, Dd)]) -> Vec<Column<'a>> {
    rules
        .iter()
        .zip(vals)
        .map(|(rule, &(value, deriv))| Column { rule, value, deriv })
        .collect()
}

/// W[u₀,…,u_{k−1}](x) at an arbitrary point.
pub fn wronskian(seeds: &SeedFamily, x: f64) -> Result<f64> {
    let rules = rules_for(seeds);
    let vals = seeds.at_dd(x)?;
    Ok(wronskian_with_derivatives_dd(x, &columns(&rules, &vals)).0.to_f64())
}

/// W, W′, W″ on the seed grid; fails if W changes sign or vanishes.
pub fn wronskian_samples(seeds: &SeedFamily) -> Result<WronskianSamples> {
    let rules = rules_for(seeds);
    let xs = seeds.grid.points();
    let triples: Vec<(Dd, Dd, Dd)> = xs
        .par_iter()
        .enumerate()
        .map(|(i, &x)| {
            let vals: Vec<(Dd, Dd)> = (0..seeds.k()).map(|j| seeds.pair_dd(j, i)).collect();
            wronskian_with_derivatives_dd(x, &columns(&rules, &vals))
        })
        .collect();
    let w: Vec<f64> = triples.iter().map(|t| t.0.to_f64()).collect();
    check_nodeless(&xs, &w)?;
    let log_curvature = triples
        .iter()
        .map(|&(w, w1, w2)| {
            let l1 = w1 / w;
            (w2 / w - l1 * l1).to_f64()
        })
        .collect();
    Ok(WronskianSamples {
        w,
        dw: triples.iter().map(|t| t.1.to_f64()).collect(),
        d2w: triples.iter().map(|t| t.2.to_f64()).collect(),
        exact: triples.iter().map(|t| (t.0, t.1)).collect(),
        log_curvature,
    })
}

/// V_k = x²/2 − (ln W)″ = x²/2 − (W″W − W′²)/W².
pub fn potential_from_wronskian(grid: &Grid, ws: &WronskianSamples) -> Vec<f64> {
    grid.points()
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let curv = match ws.log_curvature.get(i) {
                Some(&c) => c,
                None => {
                    let l1 = ws.dw[i] / ws.w[i];
                    ws.d2w[i] / ws.w[i] - l1 * l1
                }
            };
            0.5 * x * x - curv
        })
        .collect()
}

pub fn potential(seeds: &SeedFamily) -> Result<Vec<f64>> {
    Ok(potential_from_wronskian(&seeds.grid, &wronskian_samples(seeds)?))
}

/// The complete system: potential and both ladders of eigenfunctions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SusySystem {
    pub spec: SystemSpec,
    pub n_max: usize,
    pub xs: Vec<f64>,
    pub potential: Vec<f64>,
    pub wronskian: Vec<f64>,
    /// φ_n^{(k)} for n = 0..=n_max.
    pub iso_states: Vec<State>,
    /// φ_{ε_j}^{(k)} for j = 0..k.
    pub new_states: Vec<State>,
}

fn stage<T>(name: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::InvalidSpec(_) | Error::Construction { .. } => e,
        other => Error::Construction {
            stage: name,
            detail: other.to_string(),
        },
    })
}

pub fn build_system(spec: &SystemSpec, n_max: usize) -> Result<SusySystem> {
    spec.validate()?;
    let seeds = stage("seed chain", build_seed_chain(spec))?;
    let ws = match wronskian_samples(&seeds) {
        Err(Error::SingularPotential { x }) => {
            return Err(Error::Construction {
                stage: "wronskian",
                detail: format!("Wronskian vanishes or changes sign near x = {x}"),
            })
        }
        other => other?,
    };
    let potential = potential_from_wronskian(&spec.grid, &ws);
    let ctx = CrumContext::new(&seeds, &ws.exact);
    let iso_states = (0..=n_max)
        .into_iter()
        .map(|n| states::iso_state(&ctx, &potential, n))
        .collect::<Result<Vec<_>>>()?;
    let new_states = (0..spec.k)
        .into_iter()
        .map(|j| states::new_state(&ctx, &potential, j))
        .collect::<Result<Vec<_>>>()?;
    Ok(SusySystem {
        spec: *spec,
        n_max,
        xs: spec.grid.points(),
        potential,
        wronskian: ws.w,
        iso_states,
        new_states,
    })
}

impl SusySystem {
    pub fn grid(&self) -> Grid {
        self.spec.grid
    }

    /// Sorted spectrum: new levels then the isospectral ladder.
    pub fn spectrum(&self) -> Vec<f64> {
        self.new_states
            .iter()
            .chain(&self.iso_states)
            .map(|s| s.energy)
            .collect()
    }

    pub fn state(&self, level: Level) -> Option<&State> {
        match level {
            Level::Iso(n) => self.iso_states.get(n),
            Level::New(j) => self.new_states.get(j),
        }
    }
}
