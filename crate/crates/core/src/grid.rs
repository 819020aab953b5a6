//! Uniform grids and trapezoid weights.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `n` equally spaced points covering `[min, max]` inclusive.
pub fn linspace(min: f64, max: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.5 * (min + max)],
        _ => {
            let h = (max - min) / (n - 1) as f64;
            (0..n).map(|i| if i == n - 1 { max } else { min + h * i as f64 }).collect()
        }
    }
}

/// Composite trapezoid weights for `n` points with spacing `h`.
pub fn trapezoid_weights(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![h; n];
    if n > 0 {
        w[0] *= 0.5;
        w[n - 1] *= 0.5;
    }
    w
}

/// Rectangular `(p, q)` grid description, `n` points per axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseGrid {
    pub p_min: f64,
    pub p_max: f64,
    pub q_min: f64,
    pub q_max: f64,
    pub n: usize,
}

impl PhaseGrid {
    pub fn new(p_min: f64, p_max: f64, q_min: f64, q_max: f64, n: usize) -> Result<Self> {
        let g = Self { p_min, p_max, q_min, q_max, n };
        g.validate()?;
        Ok(g)
    }

    pub fn square(half_width: f64, n: usize) -> Result<Self> {
        Self::new(-half_width, half_width, -half_width, half_width, n)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.p_min, self.p_max, self.q_min, self.q_max].iter().all(|x| x.is_finite());
        if !finite || self.p_max <= self.p_min || self.q_max <= self.q_min || self.n < 2 {
            return Err(Error::InvalidArgument(format!("degenerate grid {self:?}")));
        }
        Ok(())
    }

    pub fn p_axis(&self) -> Vec<f64> {
        linspace(self.p_min, self.p_max, self.n)
    }

    pub fn q_axis(&self) -> Vec<f64> {
        linspace(self.q_min, self.q_max, self.n)
    }

    pub fn dp(&self) -> f64 {
        (self.p_max - self.p_min) / (self.n - 1) as f64
    }

    pub fn dq(&self) -> f64 {
        (self.q_max - self.q_min) / (self.n - 1) as f64
    }
}

/// Values sampled on a [`PhaseGrid`], stored `p`-major: entry `i·n + j`
/// belongs to `(p_i, q_j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridValues {
    pub grid: PhaseGrid,
    pub values: Vec<f64>,
}

impl GridValues {
    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Trapezoid estimate of `∫ f dp dq / 2π`.
    pub fn integral(&self) -> f64 {
        let n = self.grid.n;
        let wp = trapezoid_weights(n, self.grid.dp());
        let wq = trapezoid_weights(n, self.grid.dq());
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += wp[i] * wq[j] * self.values[i * n + j];
            }
        }
        acc / std::f64::consts::TAU
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let p = self.grid.p_axis();
        let q = self.grid.q_axis();
        let n = self.grid.n;
        self.values.iter().enumerate().map(move |(k, &v)| (p[k / n], q[k % n], v))
    }
}

/// Uniform one-dimensional grid for wavefunction quadratures.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub points: usize,
}

impl SpatialGrid {
    pub const DEFAULT_POINTS: usize = 2048;

    pub fn new(x_min: f64, x_max: f64, points: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite() && x_max > x_min) || points < 5 {
            return Err(Error::InvalidArgument(format!("degenerate spatial grid [{x_min}, {x_max}] with {points} points")));
        }
        Ok(Self { x_min, x_max, points })
    }

    pub fn symmetric(half_width: f64, points: usize) -> Result<Self> {
        Self::new(-half_width, half_width, points)
    }

    /// `±8·max(1, |ε|)·max(1, |α|)` with the default point count.
    pub fn for_state(eps_modulus: f64, alpha_modulus: f64) -> Self {
        let half = 8.0 * eps_modulus.max(1.0) * alpha_modulus.max(1.0);
        Self { x_min: -half, x_max: half, points: Self::DEFAULT_POINTS }
    }

    pub fn axis(&self) -> Vec<f64> {
        linspace(self.x_min, self.x_max, self.points)
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.points - 1) as f64
    }

    pub fn weights(&self) -> Vec<f64> {
        trapezoid_weights(self.points, self.dx())
    }

    /// Trapezoid `∫ a*(x) b(x) dx`.
    pub fn inner(&self, a: &[C64], b: &[C64]) -> C64 {
        self.weights().iter().zip(a.iter().zip(b)).map(|(w, (x, y))| *w * x.conj() * y).sum()
    }

    pub fn norm(&self, a: &[C64]) -> f64 {
        self.inner(a, a).re.max(0.0).sqrt()
    }
}
