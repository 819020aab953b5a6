//! Photon-number statistics of Gaussian states.
//!
//! The probability of the Fock configuration `n = (n₁ … n_N)` is
//! `P_n = P₀ · H^R_{(n,n)}(y) / n!`, where `H^R_m` is the multivariate Hermite
//! polynomial with generating function
//!
//! ```text
//! exp(−½ tᵀRt + tᵀRy) = Σ_m H^R_m(y) t^m / m!
//! ```
//!
//! The polynomials are built on the multi-index lattice from
//! `H_{m+e_j} = (Ry)_j H_m − Σ_k R_jk m_k H_{m−e_k}`. Probabilities use the
//! scaled values `H_m / √m!`, which keeps every lattice entry bounded.
//!
//! An independent route evaluates `P_n = ∫ W_ρ ∏_j W_{n_j n_j} dΓ` with Fock
//! Wigner functions on a tensor trapezoid grid.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{GaussianState, HermiteArgument, QFunctionParams};
use crate::grid::{linspace, trapezoid_weights};
use crate::linalg::{asymmetry, max_abs};

/// Largest total degree accepted by [`hermite_multivar`].
pub const MAX_HERMITE_DEGREE: usize = 40;

/// Largest per-mode photon number for distributions and Fock Wigner functions.
pub const MAX_PHOTON_NUMBER: u32 = 60;

/// Entries above this overflow the exact factorial.
pub const MAX_FACTORIAL_ENTRY: u32 = 20;

/// Upper bound on the number of lattice points in one Hermite table.
pub const MAX_LATTICE_SIZE: usize = 1 << 22;

/// Negative probabilities down to this are treated as rounding noise.
pub const NEGATIVE_TOL: f64 = 1e-10;

/// Maximum disagreement between the fine and half-resolution oracle grids.
pub const ORACLE_RICHARDSON_TOL: f64 = 1e-6;

/// Photon numbers `(n₁ … n_N)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Self {
        Self(entries)
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0; n])
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> usize {
        self.0.iter().map(|&k| k as usize).sum()
    }

    /// Exact `∏ n_j!`.
    pub fn factorial(&self) -> Result<u128> {
        let mut acc: u128 = 1;
        for &k in &self.0 {
            if k > MAX_FACTORIAL_ENTRY {
                return Err(Error::IndexOutOfRange { index: k as usize, limit: MAX_FACTORIAL_ENTRY as usize });
            }
            for f in 2..=k as u128 {
                acc = acc.checked_mul(f).ok_or(Error::IndexOutOfRange {
                    index: k as usize,
                    limit: MAX_FACTORIAL_ENTRY as usize,
                })?;
            }
        }
        Ok(acc)
    }

    /// All indices with `0 ≤ m_j ≤ self_j`, in lexicographic order.
    pub fn box_iter(&self) -> impl Iterator<Item = MultiIndex> + '_ {
        let shape: Vec<usize> = self.0.iter().map(|&k| k as usize + 1).collect();
        let size: usize = shape.iter().product();
        (0..size).map(move |flat| MultiIndex(unflatten(flat, &shape).into_iter().map(|k| k as u32).collect()))
    }
}

impl From<Vec<u32>> for MultiIndex {
    fn from(v: Vec<u32>) -> Self {
        Self(v)
    }
}

fn unflatten(mut flat: usize, shape: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; shape.len()];
    for d in (0..shape.len()).rev() {
        idx[d] = flat % shape[d];
        flat /= shape[d];
    }
    idx
}

/// Dense table of Hermite values over the box `0 ≤ m ≤ top`, stored
/// lexicographically with the last index fastest.
struct HermiteLattice {
    shape: Vec<usize>,
    strides: Vec<usize>,
    values: Vec<C64>,
}

impl HermiteLattice {
    fn lattice_size(top: &[usize]) -> Result<usize> {
        top.iter().try_fold(1usize, |acc, &t| acc.checked_mul(t + 1)).filter(|&s| s <= MAX_LATTICE_SIZE).ok_or_else(
            || Error::InvalidArgument(format!("Hermite lattice for {top:?} exceeds {MAX_LATTICE_SIZE} entries")),
        )
    }

    /// Fills the table. With `scaled`, entries are `H_m / √m!`.
    fn build(r: &DMatrix<C64>, ry: &DVector<C64>, top: &[usize], scaled: bool) -> Result<Self> {
        let dim = top.len();
        let size = Self::lattice_size(top)?;
        let shape: Vec<usize> = top.iter().map(|&t| t + 1).collect();
        let mut strides = vec![1; dim];
        for d in (0..dim.saturating_sub(1)).rev() {
            strides[d] = strides[d + 1] * shape[d + 1];
        }
        let sqrt: Vec<f64> = (0..=top.iter().copied().max().unwrap_or(0) + 1).map(|k| (k as f64).sqrt()).collect();

        let mut values = vec![C64::new(0.0, 0.0); size];
        values[0] = C64::new(1.0, 0.0);
        let mut idx = vec![0usize; dim];
        for flat in 1..size {
            // advance the odometer to `flat`
            for d in (0..dim).rev() {
                idx[d] += 1;
                if idx[d] < shape[d] {
                    break;
                }
                idx[d] = 0;
            }
            let j = idx.iter().position(|&k| k > 0).expect("nonzero index");
            let prev = flat - strides[j];
            let prev_j = idx[j] - 1;
            let mut acc = ry[j] * values[prev];
            for k in 0..dim {
                let mk = if k == j { prev_j } else { idx[k] };
                if mk == 0 {
                    continue;
                }
                let weight = if scaled { sqrt[mk] } else { mk as f64 };
                acc -= r[(j, k)] * values[prev - strides[k]] * weight;
            }
            values[flat] = if scaled { acc / sqrt[prev_j + 1] } else { acc };
        }
        Ok(Self { shape, strides, values })
    }

    fn get(&self, m: &[usize]) -> C64 {
        debug_assert!(m.iter().zip(&self.shape).all(|(a, b)| a < b));
        self.values[m.iter().zip(&self.strides).map(|(a, s)| a * s).sum::<usize>()]
    }
}

fn check_r(r: &DMatrix<C64>) -> Result<()> {
    let asym = asymmetry(r);
    if asym > 1e-12 * (1.0 + max_abs(r)) {
        return Err(Error::AsymmetricR { asymmetry: asym });
    }
    Ok(())
}

/// `H^R_m(y)` from the generating function `exp(−½tᵀRt + tᵀRy)`.
pub fn hermite_multivar(r: &DMatrix<C64>, y: &DVector<C64>, m: &[u32]) -> Result<C64> {
    let dim = m.len();
    if r.nrows() != dim || r.ncols() != dim || y.len() != dim {
        return Err(Error::DimensionMismatch(format!(
            "R is {}x{}, y has {} entries, index has {}",
            r.nrows(),
            r.ncols(),
            y.len(),
            dim
        )));
    }
    check_r(r)?;
    let degree: usize = m.iter().map(|&k| k as usize).sum();
    if degree > MAX_HERMITE_DEGREE {
        return Err(Error::DegreeTooLarge { degree, max: MAX_HERMITE_DEGREE });
    }
    let top: Vec<usize> = m.iter().map(|&k| k as usize).collect();
    let lattice = HermiteLattice::build(r, &(r * y), &top, false)?;
    Ok(lattice.get(&top))
}

/// Photon probabilities over a box, with the count of clamped values.
struct ProbabilityTable {
    probs: Vec<(MultiIndex, f64)>,
    clamped: usize,
}

fn probability_table(params: &QFunctionParams, cutoff: &[u32]) -> Result<ProbabilityTable> {
    let n = params.n_modes();
    if cutoff.len() != n {
        return Err(Error::DimensionMismatch(format!("{}-entry cutoff for {n} modes", cutoff.len())));
    }
    if let Some(&big) = cutoff.iter().find(|&&k| k > MAX_PHOTON_NUMBER) {
        return Err(Error::IndexOutOfRange { index: big as usize, limit: MAX_PHOTON_NUMBER as usize });
    }
    check_r(&params.r_matrix)?;
    let top: Vec<usize> = cutoff.iter().chain(cutoff).map(|&k| k as usize).collect();
    let lattice = HermiteLattice::build(&params.r_matrix, &params.ry, &top, true)?;

    let mut probs = Vec::new();
    let mut clamped = 0;
    let mut pair = vec![0usize; 2 * n];
    for index in MultiIndex(cutoff.to_vec()).box_iter() {
        for (j, &k) in index.entries().iter().enumerate() {
            pair[j] = k as usize;
            pair[n + j] = k as usize;
        }
        let mut p = params.p0 * lattice.get(&pair).re;
        if p < 0.0 {
            if p < -NEGATIVE_TOL {
                return Err(Error::NegativeProbability { value: p, index: index.entries().to_vec() });
            }
            p = 0.0;
            clamped += 1;
        }
        probs.push((index, p));
    }
    Ok(ProbabilityTable { probs, clamped })
}

/// `P_n` for a Gaussian state.
pub fn photon_prob(state: &GaussianState, n: &MultiIndex) -> Result<f64> {
    photon_prob_with(state, n, HermiteArgument::default())
}

pub fn photon_prob_with(state: &GaussianState, n: &MultiIndex, route: HermiteArgument) -> Result<f64> {
    photon_prob_from_params(&state.to_q_params_with(route)?, n)
}

pub fn photon_prob_from_params(params: &QFunctionParams, n: &MultiIndex) -> Result<f64> {
    let table = probability_table(params, n.entries())?;
    Ok(table.probs.last().map_or(0.0, |(_, p)| *p))
}

/// Photon-number table over `0 ≤ n ≤ cutoff`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhotonDistribution {
    pub cutoff: MultiIndex,
    /// Lexicographic order, last mode fastest.
    pub probs: Vec<(MultiIndex, f64)>,
    pub mass: f64,
    pub means: Vec<f64>,
    /// Number of tiny negative values clamped to zero.
    pub clamped: usize,
}

impl PhotonDistribution {
    /// Builds the summary fields from a probability table.
    pub fn from_table(cutoff: MultiIndex, probs: Vec<(MultiIndex, f64)>, clamped: usize) -> Self {
        let n = cutoff.len();
        let mass = probs.iter().map(|(_, p)| p).sum();
        let mut means = vec![0.0; n];
        for (idx, p) in &probs {
            for (j, &k) in idx.entries().iter().enumerate() {
                means[j] += k as f64 * p;
            }
        }
        Self { cutoff, probs, mass, means, clamped }
    }

    pub fn get(&self, n: &MultiIndex) -> Option<f64> {
        self.probs.iter().find(|(idx, _)| idx == n).map(|(_, p)| *p)
    }
}

pub fn photon_distribution(state: &GaussianState, cutoff: &MultiIndex) -> Result<PhotonDistribution> {
    photon_distribution_from_params(&state.to_q_params()?, cutoff)
}

pub fn photon_distribution_from_params(params: &QFunctionParams, cutoff: &MultiIndex) -> Result<PhotonDistribution> {
    let table = probability_table(params, cutoff.entries())?;
    Ok(PhotonDistribution::from_table(cutoff.clone(), table.probs, table.clamped))
}

/// Generalised Laguerre polynomial `L_n^α(x)` by the three-term recurrence.
pub fn laguerre(n: u32, alpha: f64, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 + alpha - x;
    for k in 1..n {
        let k = k as f64;
        let next = ((2.0 * k + 1.0 + alpha - x) * cur - (k + alpha) * prev) / (k + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Wigner function of `|m⟩⟨n|`:
/// `2(−1)ⁿ √(n!/m!) (√2(q − ip))^{m−n} e^{−(p²+q²)} L_n^{m−n}(2(p²+q²))`
/// for `m ≥ n`, conjugate-symmetric otherwise.
pub fn wigner_fock(m: u32, n: u32, p: f64, q: f64) -> Result<C64> {
    for k in [m, n] {
        if k > MAX_PHOTON_NUMBER {
            return Err(Error::IndexOutOfRange { index: k as usize, limit: MAX_PHOTON_NUMBER as usize });
        }
    }
    if m < n {
        return Ok(wigner_fock(n, m, p, q)?.conj());
    }
    let d = m - n;
    let r2 = p * p + q * q;
    let sign = if n.is_multiple_of(2) { 2.0 } else { -2.0 };
    let lag = laguerre(n, d as f64, 2.0 * r2);
    if d == 0 {
        return Ok(C64::new(sign * (-r2).exp() * lag, 0.0));
    }
    if r2 == 0.0 {
        return Ok(C64::new(0.0, 0.0));
    }
    // √(n!/m!) (√2 r)^d e^{−r²} combined in the log domain
    let log_ratio: f64 = -0.5 * (n + 1..=m).map(|k| (k as f64).ln()).sum::<f64>();
    let log_mag = log_ratio + d as f64 * (2.0 * r2).sqrt().ln() - r2;
    let phase = C64::new(q, -p).arg() * d as f64;
    Ok(C64::from_polar(sign * log_mag.exp() * lag, phase))
}

/// Quadrature settings for [`photon_prob_oracle`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleGrid {
    /// Points per phase-space axis; odd, so that every other point forms the
    /// half-resolution grid.
    pub points: usize,
}

impl Default for OracleGrid {
    fn default() -> Self {
        Self { points: 241 }
    }
}

/// Brute-force `P_n = ∫ W_ρ ∏_j W_{n_j n_j}(p_j, q_j) ∏ dp_j dq_j / 2π`.
///
/// Each axis spans `⟨Q⟩_i ± (6 + 2√n_max)·√M_ii`. The estimate is checked
/// against the same sum on the half-resolution grid.
pub fn photon_prob_oracle(state: &GaussianState, n: &MultiIndex, grid: OracleGrid) -> Result<f64> {
    let modes = state.n_modes();
    if modes > 2 {
        return Err(Error::InvalidArgument(format!("oracle supports at most 2 modes, got {modes}")));
    }
    if n.len() != modes {
        return Err(Error::DimensionMismatch(format!("{}-entry index for {modes} modes", n.len())));
    }
    if grid.points < 5 || grid.points.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!("oracle grid needs an odd point count ≥ 5, got {}", grid.points)));
    }
    let dim = 2 * modes;
    let n_max = n.entries().iter().copied().max().unwrap_or(0);
    let reach = 6.0 + 2.0 * (n_max as f64).sqrt();
    let axes: Vec<Vec<f64>> = (0..dim)
        .map(|i| {
            let c = state.mean()[i];
            let h = reach * state.dispersion()[(i, i)].sqrt();
            linspace(c - h, c + h, grid.points)
        })
        .collect();
    let spacing: Vec<f64> = axes.iter().map(|a| a[1] - a[0]).collect();

    // ∏_j W_{n_j n_j} is separable over modes: tabulate per mode on its (p_j, q_j) plane
    let pts = grid.points;
    let mut fock_tables = Vec::with_capacity(modes);
    for j in 0..modes {
        let k = n.entries()[j];
        let mut table = vec![0.0; pts * pts];
        for (a, &p) in axes[j].iter().enumerate() {
            for (b, &q) in axes[modes + j].iter().enumerate() {
                table[a * pts + b] = wigner_fock(k, k, p, q)?.re;
            }
        }
        fock_tables.push(table);
    }

    let eval = state.wigner_evaluator()?;
    let total = pts.pow(dim as u32);
    let fine_w: Vec<Vec<f64>> = spacing.iter().map(|&h| trapezoid_weights(pts, h)).collect();
    let half = pts.div_ceil(2);
    let coarse_w: Vec<Vec<f64>> = spacing.iter().map(|&h| trapezoid_weights(half, 2.0 * h)).collect();

    // rows over the first axis are summed independently, then reduced in order
    let rows: Vec<Result<(f64, f64)>> = (0..pts)
        .into_par_iter()
        .map(|first| {
            let mut fine = 0.0;
            let mut coarse = 0.0;
            let mut point = vec![0.0; dim];
            let inner = total / pts;
            let mut idx = vec![first; dim];
            for rest in 0..inner {
                let mut r = rest;
                for d in (1..dim).rev() {
                    idx[d] = r % pts;
                    r /= pts;
                }
                for d in 0..dim {
                    point[d] = axes[d][idx[d]];
                }
                let mut value = eval.eval_slice(&point)?;
                for (j, table) in fock_tables.iter().enumerate() {
                    value *= table[idx[j] * pts + idx[modes + j]];
                }
                let weight: f64 = (0..dim).map(|d| fine_w[d][idx[d]]).product();
                fine += weight * value;
                if idx.iter().all(|&i| i % 2 == 0) {
                    let weight: f64 = (0..dim).map(|d| coarse_w[d][idx[d] / 2]).product();
                    coarse += weight * value;
                }
            }
            Ok((fine, coarse))
        })
        .collect();
    let norm = std::f64::consts::TAU.powi(modes as i32);
    let (mut fine, mut coarse) = (0.0, 0.0);
    for row in rows {
        let (f, c) = row?;
        fine += f;
        coarse += c;
    }
    fine /= norm;
    coarse /= norm;
    if (fine - coarse).abs() > ORACLE_RICHARDSON_TOL {
        return Err(Error::GridTooCoarse(format!(
            "fine grid gives {fine:e}, half grid {coarse:e} ({} points per axis)",
            pts
        )));
    }
    Ok(fine)
}
