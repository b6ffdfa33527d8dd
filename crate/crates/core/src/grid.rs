//! Uniform grids, composite Simpson quadrature on samples and fourth-order
//! central stencils.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Half-width of the 5-point stencils.
pub const STENCIL_HALF_WIDTH: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
}

impl Default for Grid {
    fn default() -> Self {
        Self {
            x_min: -8.0,
            x_max: 8.0,
            n_points: 1601,
        }
    }
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, n_points: usize) -> Result<Self> {
        let g = Self { x_min, x_max, n_points };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x_max > self.x_min) || !self.x_min.is_finite() || !self.x_max.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "grid interval [{}, {}] is empty or not finite",
                self.x_min, self.x_max
            )));
        }
        if self.n_points < 401 || self.n_points.is_multiple_of(2) {
            return Err(Error::InvalidSpec(format!(
                "grid needs an odd number of points ≥ 401, got {}",
                self.n_points
            )));
        }
        Ok(())
    }

    /// Same interval with twice the resolution (2n − 1 points).
    pub fn refined(&self) -> Self {
        Self {
            n_points: 2 * self.n_points - 1,
            ..*self
        }
    }

    pub fn step(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n_points - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        // Symmetric evaluation keeps mirrored nodes exactly opposite.
        let m = (self.n_points - 1) as f64;
        let c = 0.5 * (self.x_min + self.x_max);
        let half = 0.5 * (self.x_max - self.x_min);
        c + half * ((2 * i) as f64 - m) / m
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.x(i)).collect()
    }

    /// Composite Simpson ∫ f dx over the whole grid.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.n_points);
        simpson(f, self.step())
    }

    /// ∫ f·g dx.
    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        let prod: Vec<f64> = f.iter().zip(g).map(|(a, b)| a * b).collect();
        self.integrate(&prod)
    }

    pub fn norm(&self, f: &[f64]) -> f64 {
        self.inner(f, f).sqrt()
    }
}

/// Composite Simpson on equally spaced samples (odd length ≥ 3).
pub fn simpson(f: &[f64], h: f64) -> f64 {
    let n = f.len();
    assert!(n >= 3 && n % 2 == 1, "Simpson needs an odd number of samples");
    let mut s = f[0] + f[n - 1];
    for (i, v) in f.iter().enumerate().take(n - 1).skip(1) {
        s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    s * h / 3.0
}

/// Simpson over the index window [lo, hi] (inclusive); drops one sample at
/// the top when the window has an even count.
pub fn simpson_window(f: &[f64], h: f64, lo: usize, hi: usize) -> f64 {
    let hi = if (hi - lo) % 2 == 1 { hi - 1 } else { hi };
    simpson(&f[lo..=hi], h)
}

/// First derivative, 5-point central stencil; NaN on the two edge samples.
pub fn d1(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![f64::NAN; n];
    for i in 2..n.saturating_sub(2) {
        out[i] = (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) / (12.0 * h);
    }
    out
}

/// Second derivative, 5-point central stencil; NaN on the two edge samples.
pub fn d2(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![f64::NAN; n];
    for i in 2..n.saturating_sub(2) {
        out[i] = (-f[i - 2] + 16.0 * f[i - 1] - 30.0 * f[i] + 16.0 * f[i + 1] - f[i + 2]) / (12.0 * h * h);
    }
    out
}

/// Cumulative trapezoid integral anchored at index `origin` (value 0 there).
pub fn cumulative_trapezoid(f: &[f64], h: f64, origin: usize) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![0.0; n];
    for i in origin + 1..n {
        out[i] = out[i - 1] + 0.5 * h * (f[i - 1] + f[i]);
    }
    for i in (0..origin).rev() {
        out[i] = out[i + 1] - 0.5 * h * (f[i] + f[i + 1]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_is_valid_and_symmetric() {
        let g = Grid::default();
        g.validate().unwrap();
        assert!((g.step() - 0.01).abs() < 1e-15);
        for i in 0..g.n_points {
            assert_eq!(g.x(i), -g.x(g.n_points - 1 - i));
        }
        assert_eq!(g.x(800), 0.0);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::new(-8.0, 8.0, 400).is_err());
        assert!(Grid::new(-8.0, 8.0, 1600).is_err());
        assert!(Grid::new(1.0, -1.0, 1601).is_err());
        assert_eq!(Grid::default().refined().n_points, 3201);
    }

    #[test]
    fn gaussian_normalization() {
        let g = Grid::default();
        let f: Vec<f64> = g.points().iter().map(|x| (-x * x).exp()).collect();
        assert!((g.integrate(&f) - std::f64::consts::PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn stencils_are_fourth_order() {
        let err = |n: usize| {
            let g = Grid::new(-40.0, 40.0, n).unwrap();
            let f: Vec<f64> = g.points().iter().map(|x| x.sin()).collect();
            let d = d2(&f, g.step());
            (2..n - 2).map(|i| (d[i] + g.x(i).sin()).abs()).fold(0.0, f64::max)
        };
        let ratio = err(401) / err(801);
        assert!(ratio > 14.0 && ratio < 18.0, "ratio {ratio}");
    }

    #[test]
    fn cumulative_trapezoid_of_constant() {
        let c = cumulative_trapezoid(&[2.0; 11], 0.5, 5);
        assert_eq!(c[5], 0.0);
        assert!((c[10] - 5.0).abs() < 1e-15);
        assert!((c[0] + 5.0).abs() < 1e-15);
    }
}
