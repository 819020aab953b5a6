//! Even and odd coherent states of the parametric oscillator.
//!
//! ```text
//! Ψ_even = Ψ₀ exp(−ε*α²/2ε) cosh(√2αx/ε) / √cosh|α|²
//! Ψ_odd  = Ψ₀ exp(−ε*α²/2ε) sinh(√2αx/ε) / √sinh|α|²
//! ```
//!
//! Both are eigenstates of `A²` with eigenvalue `α²`. Evaluation happens in
//! the log domain so large `|α|` does not overflow.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::{trapezoid_weights, GridValues, PhaseGrid, SpatialGrid};
use crate::oscillator::{apply_a, coherent_wavefunction, number_wavefunctions, EpsilonPoint};
use crate::photon::{MultiIndex, PhotonDistribution, MAX_PHOTON_NUMBER};

/// Odd cats with `|α|` below this are null.
pub const NULL_ALPHA: f64 = 1e-12;

/// Largest `|α|²` whose normalisation is representable.
pub const MAX_ALPHA_SQ: f64 = 700.0;

/// Wavefunction grids must reach at least this far on both sides.
pub const MIN_GRID_HALF_WIDTH: f64 = 8.0;

/// Wavefunction grids need at least this many points.
pub const MIN_GRID_POINTS: usize = 1024;

/// Largest Wigner grid side.
pub const MAX_WIGNER_RESOLUTION: usize = 512;

pub const DEFAULT_WIGNER_RESOLUTION: usize = 256;

/// Tolerated quadrature norm defect before a grid is declared too coarse.
const NORM_TOL: f64 = 1e-8;

/// Tolerated change of a Wigner value when the lag step is doubled.
const WIGNER_HALVING_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl FromStr for Parity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "even" => Ok(Parity::Even),
            "odd" => Ok(Parity::Odd),
            other => Err(Error::InvalidArgument(format!("parity `{other}` is not even or odd"))),
        }
    }
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
        })
    }
}

/// `ln cosh z` or `ln sinh z` for `Re z ≥ 0`.
fn log_cosh_sinh(z: C64, parity: Parity) -> C64 {
    let tail = (-2.0 * z).exp();
    let factor = match parity {
        Parity::Even => 1.0 + tail,
        Parity::Odd => 1.0 - tail,
    };
    z + (0.5 * factor).ln()
}

/// A cat state at a fixed point of the `ε` trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CatState {
    parity: Parity,
    alpha: C64,
    point: EpsilonPoint,
    /// `√2/ε`, so that `z = k·x` is exactly odd in `x`.
    k: C64,
    /// `−ε*α²/2ε − ln √{cosh|sinh}|α|²` plus the `Ψ₀` prefactor.
    log_constant: C64,
}

impl CatState {
    pub fn new(parity: Parity, alpha: C64, point: EpsilonPoint) -> Result<Self> {
        let a2 = alpha.norm_sqr();
        if !a2.is_finite() || a2 > MAX_ALPHA_SQ {
            return Err(Error::InvalidArgument(format!("|alpha|^2 = {a2} out of range")));
        }
        if parity == Parity::Odd && alpha.norm() < NULL_ALPHA {
            return Err(Error::NullState { modulus: alpha.norm() });
        }
        let eps = point.eps;
        let log_norm = 0.5 * log_cosh_sinh(C64::new(a2, 0.0), parity).re;
        let log_psi0 = point.inv_sqrt_eps()?.ln() - 0.25 * PI.ln();
        let log_constant = log_psi0 - 0.5 * eps.conj() * alpha * alpha / eps - log_norm;
        Ok(Self { parity, alpha, point, k: SQRT_2 / eps, log_constant })
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn alpha(&self) -> C64 {
        self.alpha
    }

    pub fn point(&self) -> &EpsilonPoint {
        &self.point
    }

    /// `Ψ(x)`; symmetric for even and antisymmetric for odd parity, bit for bit.
    pub fn wavefunction(&self, x: f64) -> C64 {
        let z = self.k * self.alpha * x;
        let chirp = C64::new(0.0, 0.5) * self.point.eps_dot / self.point.eps * (x * x);
        let (z, sign) = if z.re < 0.0 { (-z, -1.0) } else { (z, 1.0) };
        if z == C64::new(0.0, 0.0) && self.parity == Parity::Odd {
            return C64::new(0.0, 0.0);
        }
        let value = (self.log_constant + chirp + log_cosh_sinh(z, self.parity)).exp();
        match self.parity {
            Parity::Even => value,
            Parity::Odd => sign * value,
        }
    }

    pub fn sample(&self, grid: &SpatialGrid) -> Vec<C64> {
        grid.axis().into_iter().map(|x| self.wavefunction(x)).collect()
    }

    /// Default quadrature grid for this state.
    pub fn grid(&self) -> SpatialGrid {
        SpatialGrid::for_state(self.point.eps.norm(), self.alpha.norm())
    }
}

fn check_wavefunction_grid(grid: &SpatialGrid) -> Result<()> {
    if grid.points < MIN_GRID_POINTS || grid.x_min > -MIN_GRID_HALF_WIDTH || grid.x_max < MIN_GRID_HALF_WIDTH {
        return Err(Error::GridTooCoarse(format!(
            "need at least {MIN_GRID_POINTS} points over ±{MIN_GRID_HALF_WIDTH}, got {grid:?}"
        )));
    }
    Ok(())
}

fn relative_residual(grid: &SpatialGrid, lhs: &[C64], rhs: &[C64]) -> f64 {
    let diff: Vec<C64> = lhs.iter().zip(rhs).map(|(a, b)| a - b).collect();
    grid.norm(&diff) / grid.norm(rhs)
}

/// `‖A²Ψ − α²Ψ‖ / ‖α²Ψ‖` with `A` applied by finite differences.
pub fn cat_a_squared_residual(cat: &CatState, grid: &SpatialGrid) -> Result<f64> {
    check_wavefunction_grid(grid)?;
    let psi = cat.sample(grid);
    let a2psi = apply_a(cat.point(), grid, &apply_a(cat.point(), grid, &psi)?)?;
    let target: Vec<C64> = psi.iter().map(|v| cat.alpha * cat.alpha * v).collect();
    Ok(relative_residual(grid, &a2psi, &target))
}

/// `‖AΨ_α − αΨ_α‖ / ‖αΨ_α‖` for the coherent state; relative to `‖Ψ_α‖`
/// when `α = 0`.
pub fn coherent_a_residual(point: &EpsilonPoint, alpha: C64, grid: &SpatialGrid) -> Result<f64> {
    check_wavefunction_grid(grid)?;
    let psi: Vec<C64> = grid.axis().into_iter().map(|x| coherent_wavefunction(point, alpha, x)).collect::<Result<_>>()?;
    let apsi = apply_a(point, grid, &psi)?;
    let scale = if alpha == C64::new(0.0, 0.0) { C64::new(1.0, 0.0) } else { alpha };
    let target: Vec<C64> = psi.iter().map(|v| alpha * v).collect();
    let diff: Vec<C64> = apsi.iter().zip(&target).map(|(a, b)| a - b).collect();
    Ok(grid.norm(&diff) / (scale.norm() * grid.norm(&psi)))
}

/// `⟨Ψ|A†A|Ψ⟩ = ‖AΨ‖²` by quadrature.
pub fn cat_mean_number(cat: &CatState, grid: &SpatialGrid) -> Result<f64> {
    check_wavefunction_grid(grid)?;
    let apsi = apply_a(cat.point(), grid, &cat.sample(grid))?;
    Ok(grid.norm(&apsi).powi(2))
}

/// `P_n = |⟨Ψ_n|cat⟩|²` for `n ≤ cutoff`, projecting on the number states of
/// the same `ε`.
pub fn cat_photon_distribution(cat: &CatState, cutoff: u32) -> Result<PhotonDistribution> {
    if cutoff > MAX_PHOTON_NUMBER {
        return Err(Error::IndexOutOfRange { index: cutoff as usize, limit: MAX_PHOTON_NUMBER as usize });
    }
    let base = cat.grid();
    let reach = cat.point.eps.norm() * ((2.0 * cutoff as f64 + 1.0).sqrt() + 8.0);
    let half = base.x_max.max(reach);
    // resolve the fastest of the cat and the highest number state
    let points = base.points.max((half * 128.0).ceil() as usize);
    let grid = SpatialGrid::symmetric(half, points)?;
    photon_distribution_on(cat, cutoff, &grid)
}

pub fn photon_distribution_on(cat: &CatState, cutoff: u32, grid: &SpatialGrid) -> Result<PhotonDistribution> {
    check_wavefunction_grid(grid)?;
    let x = grid.axis();
    let weights = grid.weights();
    let psi = cat.sample(grid);
    let norm: f64 = weights.iter().zip(&psi).map(|(w, v)| w * v.norm_sqr()).sum();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(Error::GridTooCoarse(format!("cat norm {norm} on {grid:?}")));
    }
    let m = cutoff as usize + 1;
    let mut overlaps = vec![C64::new(0.0, 0.0); m];
    let mut top_norm = 0.0;
    for i in 0..x.len() {
        let basis = number_wavefunctions(&cat.point, cutoff, x[i])?;
        for n in 0..m {
            overlaps[n] += weights[i] * basis[n].conj() * psi[i];
        }
        top_norm += weights[i] * basis[cutoff as usize].norm_sqr();
    }
    if (top_norm - 1.0).abs() > NORM_TOL {
        return Err(Error::GridTooCoarse(format!("number state {cutoff} has norm {top_norm} on {grid:?}")));
    }
    let probs = overlaps.iter().enumerate().map(|(n, o)| (MultiIndex::new(vec![n as u32]), o.norm_sqr())).collect();
    Ok(PhotonDistribution::from_table(MultiIndex::new(vec![cutoff]), probs, 0))
}

/// Extent of a wavefunction, used to size the Wigner lag integral.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WignerSupport {
    /// `Ψ(x)` is negligible for `|x|` beyond this.
    pub half_width: f64,
    /// Momentum content of `Ψ` is negligible beyond this.
    pub momentum: f64,
}

impl WignerSupport {
    fn for_state(point: &EpsilonPoint, alpha: C64) -> Self {
        let a = alpha.norm();
        Self {
            half_width: 8.0 * point.eps.norm().max(1.0) * a.max(1.0),
            momentum: (SQRT_2 * a + 8.0) * point.eps_dot.norm().max(1.0),
        }
    }
}

/// Lag samples `u_k = k·du`, `0 ≤ k < len`, with trapezoid weights.
fn lag_axis(support: WignerSupport, p_bound: f64, halve: bool) -> (Vec<f64>, Vec<f64>) {
    let span = 2.0 * support.half_width;
    let du_target = PI / (4.0 * (p_bound + support.momentum));
    let mut steps = (span / du_target).ceil() as usize;
    steps += steps % 2;
    let (steps, du) = if halve { (steps / 2, 2.0 * span / steps as f64) } else { (steps, span / steps as f64) };
    let u = (0..=steps).map(|k| k as f64 * du).collect();
    (u, trapezoid_weights(steps + 1, du))
}

/// `W(p, q) = ∫ Ψ*(q + u/2) Ψ(q − u/2) e^{ipu} du` on a phase-space grid.
///
/// Columns (fixed `q`) are computed in parallel; the output order does not
/// depend on scheduling.
pub fn wigner_grid<F>(psi: F, support: WignerSupport, grid: PhaseGrid) -> Result<GridValues>
where
    F: Fn(f64) -> C64 + Sync,
{
    grid.validate()?;
    if grid.n > MAX_WIGNER_RESOLUTION {
        return Err(Error::InvalidArgument(format!(
            "resolution {} exceeds {MAX_WIGNER_RESOLUTION}",
            grid.n
        )));
    }
    let p_axis = grid.p_axis();
    let q_axis = grid.q_axis();
    let p_bound = grid.p_min.abs().max(grid.p_max.abs());

    let column = |q: f64, halve: bool, ps: &[f64]| -> Vec<f64> {
        let (u, w) = lag_axis(support, p_bound, halve);
        let g: Vec<C64> = u.iter().map(|&u| psi(q + 0.5 * u).conj() * psi(q - 0.5 * u)).collect();
        ps.iter()
            .map(|&p| {
                // g(−u) = g(u)*, so the integral over the full line is twice the real half
                let half: f64 = (0..u.len()).map(|k| w[k] * (g[k] * C64::from_polar(1.0, p * u[k])).re).sum();
                2.0 * half
            })
            .collect()
    };

    // doubling the lag step must not move the value at the widest momentum
    let q_probe = q_axis[q_axis.len() / 2];
    let p_probe = [p_axis[0], p_axis[p_axis.len() - 1]];
    let fine = column(q_probe, false, &p_probe);
    let coarse = column(q_probe, true, &p_probe);
    let gap = fine.iter().zip(&coarse).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if gap > WIGNER_HALVING_TOL {
        return Err(Error::GridTooCoarse(format!("lag quadrature moves by {gap:e} under step doubling")));
    }

    let columns: Vec<Vec<f64>> = q_axis.par_iter().map(|&q| column(q, false, &p_axis)).collect();
    let n = grid.n;
    let mut values = vec![0.0; n * n];
    for (j, col) in columns.iter().enumerate() {
        for (i, v) in col.iter().enumerate() {
            values[i * n + j] = *v;
        }
    }
    Ok(GridValues { grid, values })
}

pub fn cat_wigner_grid(cat: &CatState, grid: PhaseGrid) -> Result<GridValues> {
    wigner_grid(|x| cat.wavefunction(x), WignerSupport::for_state(&cat.point, cat.alpha), grid)
}

/// Wigner function of the coherent state `Ψ_α` through the same transform.
pub fn coherent_wigner_grid(point: &EpsilonPoint, alpha: C64, grid: PhaseGrid) -> Result<GridValues> {
    point.inv_sqrt_eps()?;
    let p = *point;
    wigner_grid(
        move |x| coherent_wavefunction(&p, alpha, x).expect("branch checked"),
        WignerSupport::for_state(point, alpha),
        grid,
    )
}
