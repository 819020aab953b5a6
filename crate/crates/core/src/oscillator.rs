//! Single-mode parametric oscillator `H = p²/2 + ω²(t)x²/2`.
//!
//! Everything is driven by the complex classical solution
//! `ε̈ + ω²(t)ε = 0`, `ε(0) = 1`, `ε̇(0) = i`. The invariant
//! `A = (i/√2)(εp − ε̇x)` satisfies `[A, A†] = 1` because the Wronskian
//! `εε̇* − ε*ε̇` stays at `−2i`.

use nalgebra::Matrix2;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::grid::SpatialGrid;

/// Tolerated `|εε̇* − ε*ε̇ + 2i|` along a trajectory, on top of the rounding
/// floor of evaluating it.
pub const WRONSKIAN_TOL: f64 = 1e-9;

/// RK4 steps per unit time, scaled by `max(1, √|ω²|max)`.
pub const EPSILON_STEPS_PER_UNIT: f64 = 400.0;

/// Callers must request at least this many steps per unit of `t·max(1, √|ω²|)`.
pub const MIN_STEPS_PER_UNIT: f64 = 10.0;

/// `|ε|` below this loses the branch of `ε^(-1/2)`.
pub const BRANCH_FLOOR: f64 = 1e-12;

/// Slack on `|tr| ≤ 2` for the stability decision.
pub const STABILITY_SLACK: f64 = 1e-9;

/// Relative slack when checking that a period fits the profile.
const PERIOD_TOL: f64 = 1e-9;

/// One constant-frequency piece of a [`FrequencyProfile::PiecewiseConstant`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencySegment {
    pub duration: f64,
    pub omega_sq: f64,
}

/// Time dependence of `ω²(t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FrequencyProfile {
    Constant { omega_sq: f64 },
    Free,
    Repulsive,
    /// `ω²(t) = ω₀² + depth·cos(Ωt)`.
    CosineModulated { omega0_sq: f64, depth: f64, modulation_frequency: f64 },
    /// Segments run back to back from `t = 0`. A periodic profile repeats;
    /// otherwise the last segment extends forever.
    PiecewiseConstant { segments: Vec<FrequencySegment>, periodic: bool },
}

impl FrequencyProfile {
    pub fn harmonic() -> Self {
        Self::Constant { omega_sq: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |x: f64| x.is_finite();
        let ok = match self {
            Self::Constant { omega_sq } => finite(*omega_sq),
            Self::Free | Self::Repulsive => true,
            Self::CosineModulated { omega0_sq, depth, modulation_frequency } => {
                finite(*omega0_sq) && finite(*depth) && finite(*modulation_frequency)
            }
            Self::PiecewiseConstant { segments, .. } => {
                !segments.is_empty() && segments.iter().all(|s| s.duration > 0.0 && finite(s.duration) && finite(s.omega_sq))
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("malformed frequency profile {self:?}")))
        }
    }

    pub fn omega_sq(&self, t: f64) -> f64 {
        match self {
            Self::Constant { omega_sq } => *omega_sq,
            Self::Free => 0.0,
            Self::Repulsive => -1.0,
            Self::CosineModulated { omega0_sq, depth, modulation_frequency } => {
                omega0_sq + depth * (modulation_frequency * t).cos()
            }
            Self::PiecewiseConstant { segments, periodic } => {
                let total: f64 = segments.iter().map(|s| s.duration).sum();
                let mut local = if *periodic { t.rem_euclid(total) } else { t };
                for s in segments {
                    if local < s.duration {
                        return s.omega_sq;
                    }
                    local -= s.duration;
                }
                segments.last().expect("validated profile").omega_sq
            }
        }
    }

    /// Bound on `|ω²(t)|` over all times.
    pub fn max_abs_omega_sq(&self) -> f64 {
        match self {
            Self::Constant { omega_sq } => omega_sq.abs(),
            Self::Free => 0.0,
            Self::Repulsive => 1.0,
            Self::CosineModulated { omega0_sq, depth, .. } => omega0_sq.abs() + depth.abs(),
            Self::PiecewiseConstant { segments, .. } => segments.iter().map(|s| s.omega_sq.abs()).fold(0.0, f64::max),
        }
    }

    /// Whether `ω(0) = 1`.
    pub fn normalized_start(&self) -> bool {
        (self.omega_sq(0.0) - 1.0).abs() < 1e-12
    }

    /// Fails with `NotPeriodic` unless `ω²(t + period) = ω²(t)` for all `t`.
    pub fn check_period(&self, period: f64) -> Result<()> {
        let not_periodic = Err(Error::NotPeriodic { period });
        if !(period > 0.0 && period.is_finite()) {
            return not_periodic;
        }
        let fits = |base: f64| {
            let ratio = period / base;
            ratio >= 1.0 - PERIOD_TOL && (ratio - ratio.round()).abs() <= PERIOD_TOL * ratio
        };
        match self {
            Self::Constant { .. } | Self::Free | Self::Repulsive => Ok(()),
            Self::CosineModulated { depth, modulation_frequency, .. } => {
                if *depth == 0.0 || *modulation_frequency == 0.0 || fits(TAU / modulation_frequency.abs()) {
                    Ok(())
                } else {
                    not_periodic
                }
            }
            Self::PiecewiseConstant { segments, periodic } => {
                let uniform = segments.iter().all(|s| s.omega_sq == segments[0].omega_sq);
                if uniform || (*periodic && fits(segments.iter().map(|s| s.duration).sum())) {
                    Ok(())
                } else {
                    not_periodic
                }
            }
        }
    }

    /// Step count meeting the Wronskian tolerance over `[0, t_final]`.
    pub fn default_steps(&self, t_final: f64) -> usize {
        let rate = self.max_abs_omega_sq().sqrt().max(1.0);
        ((EPSILON_STEPS_PER_UNIT * t_final * rate).ceil() as usize).max(16)
    }

    /// Real transfer matrix of `(x, ẋ)` over `[0, τ]` at constant `ω² = w2`.
    fn constant_transfer(w2: f64, tau: f64) -> Matrix2<f64> {
        if w2 > 0.0 {
            let w = w2.sqrt();
            let (s, c) = (w * tau).sin_cos();
            Matrix2::new(c, s / w, -w * s, c)
        } else if w2 < 0.0 {
            let k = (-w2).sqrt();
            let (s, c) = ((k * tau).sinh(), (k * tau).cosh());
            Matrix2::new(c, s / k, k * s, c)
        } else {
            Matrix2::new(1.0, tau, 0.0, 1.0)
        }
    }

    /// Exact fundamental matrix for the profiles with closed forms.
    fn exact_fundamental(&self, t: f64) -> Option<Matrix2<f64>> {
        match self {
            Self::Constant { omega_sq } => Some(Self::constant_transfer(*omega_sq, t)),
            Self::Free => Some(Self::constant_transfer(0.0, t)),
            Self::Repulsive => Some(Self::constant_transfer(-1.0, t)),
            Self::CosineModulated { omega0_sq, depth, modulation_frequency } => {
                (*depth == 0.0 || *modulation_frequency == 0.0)
                    .then(|| Self::constant_transfer(omega0_sq + depth, t))
            }
            Self::PiecewiseConstant { segments, periodic } => {
                let total: f64 = segments.iter().map(|s| s.duration).sum();
                let one_period = |mut local: f64| {
                    let mut phi = Matrix2::identity();
                    for (i, s) in segments.iter().enumerate() {
                        let last = i + 1 == segments.len();
                        let span = if last && !periodic { local } else { local.min(s.duration) };
                        phi = Self::constant_transfer(s.omega_sq, span) * phi;
                        local -= span;
                        if local <= 0.0 {
                            break;
                        }
                    }
                    phi
                };
                if !periodic {
                    return Some(one_period(t));
                }
                let cycles = (t / total).floor();
                let rest = t - cycles * total;
                let full = one_period(total);
                let mut phi = Matrix2::identity();
                // repeated squaring keeps long horizons cheap
                let (mut base, mut k) = (full, cycles as u64);
                while k > 0 {
                    if k & 1 == 1 {
                        phi = base * phi;
                    }
                    base = base * base;
                    k >>= 1;
                }
                Some(one_period(rest) * phi)
            }
        }
    }
}

/// `ε`, `ε̇` and the continuously tracked `arg ε` at one time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonPoint {
    pub t: f64,
    pub eps: C64,
    pub eps_dot: C64,
    pub phase: f64,
}

impl EpsilonPoint {
    pub fn initial() -> Self {
        Self { t: 0.0, eps: C64::new(1.0, 0.0), eps_dot: C64::new(0.0, 1.0), phase: 0.0 }
    }

    /// `εε̇* − ε*ε̇ + 2i`, which vanishes for an exact solution.
    pub fn wronskian_defect(&self) -> f64 {
        (self.eps * self.eps_dot.conj() - self.eps.conj() * self.eps_dot + C64::new(0.0, 2.0)).norm()
    }

    /// Rounding floor of [`wronskian_defect`](Self::wronskian_defect): the
    /// products it cancels have size `|ε||ε̇|`.
    pub fn wronskian_floor(&self) -> f64 {
        16.0 * f64::EPSILON * self.eps.norm() * self.eps_dot.norm()
    }

    /// `ε^(-1/2)` on the tracked branch.
    pub fn inv_sqrt_eps(&self) -> Result<C64> {
        let modulus = self.eps.norm();
        if modulus < BRANCH_FLOOR {
            return Err(Error::BranchTrackingLost { modulus });
        }
        Ok(C64::from_polar(modulus.powf(-0.5), -0.5 * self.phase))
    }

    pub fn variances(&self) -> Variances {
        variances(self.eps, self.eps_dot)
    }
}

/// Sampled solution `ε(t)` on a uniform time grid starting at `t = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonTrajectory {
    pub times: Vec<f64>,
    pub eps: Vec<C64>,
    pub eps_dot: Vec<C64>,
    /// Unwrapped `arg ε`, starting at 0.
    pub phase: Vec<f64>,
}

impl EpsilonTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn point(&self, i: usize) -> EpsilonPoint {
        EpsilonPoint { t: self.times[i], eps: self.eps[i], eps_dot: self.eps_dot[i], phase: self.phase[i] }
    }

    pub fn last(&self) -> EpsilonPoint {
        self.point(self.len() - 1)
    }

    pub fn points(&self) -> impl Iterator<Item = EpsilonPoint> + '_ {
        (0..self.len()).map(|i| self.point(i))
    }

    pub fn max_wronskian_defect(&self) -> f64 {
        self.points().map(|p| p.wronskian_defect()).fold(0.0, f64::max)
    }
}

/// Solves for `ε` on `n_steps` uniform intervals of `[0, t_final]`.
///
/// Constant, free, repulsive and piecewise-constant profiles are evaluated in
/// closed form; cosine modulation uses one RK4 step per interval.
pub fn solve_epsilon(profile: &FrequencyProfile, t_final: f64, n_steps: usize) -> Result<EpsilonTrajectory> {
    solve_epsilon_with(profile, t_final, n_steps, WRONSKIAN_TOL)
}

pub fn solve_epsilon_with(
    profile: &FrequencyProfile,
    t_final: f64,
    n_steps: usize,
    wronskian_tol: f64,
) -> Result<EpsilonTrajectory> {
    solve(profile, t_final, n_steps, wronskian_tol, true)
}

/// Like [`solve_epsilon_with`] but always integrates with RK4, even where a
/// closed form exists.
pub fn solve_epsilon_rk4(
    profile: &FrequencyProfile,
    t_final: f64,
    n_steps: usize,
    wronskian_tol: f64,
) -> Result<EpsilonTrajectory> {
    solve(profile, t_final, n_steps, wronskian_tol, false)
}

fn solve(
    profile: &FrequencyProfile,
    t_final: f64,
    n_steps: usize,
    wronskian_tol: f64,
    closed_form: bool,
) -> Result<EpsilonTrajectory> {
    profile.validate()?;
    if !(t_final > 0.0 && t_final.is_finite()) {
        return Err(Error::InvalidArgument(format!("t_final = {t_final} must be positive")));
    }
    let rate = profile.max_abs_omega_sq().sqrt().max(1.0);
    let min_steps = (MIN_STEPS_PER_UNIT * t_final * rate).ceil() as usize;
    if n_steps < min_steps {
        return Err(Error::InvalidArgument(format!("{n_steps} steps below the minimum {min_steps}")));
    }
    let h = t_final / n_steps as f64;
    let times: Vec<f64> = (0..=n_steps).map(|k| if k == n_steps { t_final } else { h * k as f64 }).collect();

    let (eps, eps_dot): (Vec<C64>, Vec<C64>) = if closed_form && profile.exact_fundamental(0.0).is_some() {
        times
            .iter()
            .map(|&t| {
                let phi = profile.exact_fundamental(t).expect("closed form");
                // ε = x₁ + i x₂ with x₁(0) = 1, ẋ₁(0) = 0 and x₂(0) = 0, ẋ₂(0) = 1
                (C64::new(phi[(0, 0)], phi[(0, 1)]), C64::new(phi[(1, 0)], phi[(1, 1)]))
            })
            .unzip()
    } else {
        rk4_epsilon(profile, &times)
    };

    let mut phase = Vec::with_capacity(times.len());
    let mut prev_arg = 0.0;
    let mut acc = 0.0;
    for (k, e) in eps.iter().enumerate() {
        let modulus = e.norm();
        if modulus < BRANCH_FLOOR {
            return Err(Error::BranchTrackingLost { modulus });
        }
        let arg = e.arg();
        if k > 0 {
            // arg ε increases monotonically at rate 1/|ε|²
            acc += (arg - prev_arg).rem_euclid(TAU);
        }
        prev_arg = arg;
        phase.push(acc);
    }

    let traj = EpsilonTrajectory { times, eps, eps_dot, phase };
    for p in traj.points() {
        let drift = p.wronskian_defect();
        if !(drift <= wronskian_tol + p.wronskian_floor()) {
            return Err(Error::WronskianDrift { drift, time: p.t });
        }
    }
    Ok(traj)
}

fn rk4_epsilon(profile: &FrequencyProfile, times: &[f64]) -> (Vec<C64>, Vec<C64>) {
    let mut x = C64::new(1.0, 0.0);
    let mut v = C64::new(0.0, 1.0);
    let mut eps = vec![x];
    let mut eps_dot = vec![v];
    for w in times.windows(2) {
        let (t, h) = (w[0], w[1] - w[0]);
        let w0 = profile.omega_sq(t);
        let wm = profile.omega_sq(t + 0.5 * h);
        let w1 = profile.omega_sq(t + h);
        let (k1x, k1v) = (v, -w0 * x);
        let (k2x, k2v) = (v + 0.5 * h * k1v, -wm * (x + 0.5 * h * k1x));
        let (k3x, k3v) = (v + 0.5 * h * k2v, -wm * (x + 0.5 * h * k2x));
        let (k4x, k4v) = (v + h * k3v, -w1 * (x + h * k3x));
        x += h / 6.0 * (k1x + 2.0 * (k2x + k3x) + k4x);
        v += h / 6.0 * (k1v + 2.0 * (k2v + k3v) + k4v);
        eps.push(x);
        eps_dot.push(v);
    }
    (eps, eps_dot)
}

/// `ε` at a single time, solved with the default step count.
pub fn epsilon_at(profile: &FrequencyProfile, t: f64) -> Result<EpsilonPoint> {
    if t == 0.0 {
        return Ok(EpsilonPoint::initial());
    }
    Ok(solve_epsilon(profile, t, profile.default_steps(t))?.last())
}

/// Second moments of the state `Ψ_α` for a given `ε`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Variances {
    pub sigma_x: f64,
    pub sigma_p: f64,
    pub sigma_xp: f64,
    /// Correlation coefficient `σ_xp / √(σ_x σ_p)`.
    pub r: f64,
    pub squeezed_x: bool,
    pub squeezed_p: bool,
}

/// `σ_x = |ε|²/2`, `σ_p = |ε̇|²/2`, `σ_xp = Re(ε̇ε*)/2`.
pub fn variances(eps: C64, eps_dot: C64) -> Variances {
    let sigma_x = 0.5 * eps.norm_sqr();
    let sigma_p = 0.5 * eps_dot.norm_sqr();
    let sigma_xp = 0.5 * (eps_dot * eps.conj()).re;
    Variances {
        sigma_x,
        sigma_p,
        sigma_xp,
        r: sigma_xp / (sigma_x * sigma_p).sqrt(),
        squeezed_x: sigma_x < 0.5,
        squeezed_p: sigma_p < 0.5,
    }
}

/// `π^(-1/4) ε^(-1/2) exp(iε̇x²/2ε)`.
pub fn ground_wavefunction(point: &EpsilonPoint, x: f64) -> Result<C64> {
    let pre = point.inv_sqrt_eps()? * PI.powf(-0.25);
    Ok(pre * (C64::new(0.0, 0.5) * point.eps_dot / point.eps * x * x).exp())
}

/// Coherent state `Ψ₀ exp(−|α|²/2 − ε*α²/2ε + √2αx/ε)`, an eigenstate of `A`.
pub fn coherent_wavefunction(point: &EpsilonPoint, alpha: C64, x: f64) -> Result<C64> {
    let pre = point.inv_sqrt_eps()? * PI.powf(-0.25);
    let e = point.eps;
    let exponent = C64::new(0.0, 0.5) * point.eps_dot / e * x * x - 0.5 * alpha.norm_sqr()
        - 0.5 * e.conj() * alpha * alpha / e
        + std::f64::consts::SQRT_2 * alpha * x / e;
    Ok(pre * exponent.exp())
}

/// Number state `(ε*/2ε)^(m/2) Ψ₀ H_m(x/|ε|) / √m!`, an eigenstate of `A†A`.
pub fn number_wavefunction(point: &EpsilonPoint, m: u32, x: f64) -> Result<C64> {
    Ok(number_wavefunctions(point, m, x)?[m as usize])
}

/// `Ψ₀ … Ψ_m` at one point, sharing the Hermite recurrence.
pub fn number_wavefunctions(point: &EpsilonPoint, m_max: u32, x: f64) -> Result<Vec<C64>> {
    if m_max > crate::photon::MAX_PHOTON_NUMBER {
        return Err(Error::IndexOutOfRange {
            index: m_max as usize,
            limit: crate::photon::MAX_PHOTON_NUMBER as usize,
        });
    }
    let psi0 = ground_wavefunction(point, x)?;
    let xi = x / point.eps.norm();
    // h_m = H_m(ξ)/√(2^m m!)
    let mut out = Vec::with_capacity(m_max as usize + 1);
    let (mut prev, mut cur) = (0.0, 1.0);
    for m in 0..=m_max {
        out.push(C64::from_polar(1.0, -(m as f64) * point.phase) * psi0 * cur);
        let k = m as f64;
        let next = (2.0 / (k + 1.0)).sqrt() * xi * cur - (k / (k + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    Ok(out)
}

/// Fourth-order first derivative on a uniform grid, one-sided at the edges.
pub fn derivative(values: &[C64], h: f64) -> Result<Vec<C64>> {
    let n = values.len();
    if n < 5 {
        return Err(Error::GridTooCoarse(format!("{n} points cannot carry a fourth-order stencil")));
    }
    let f = values;
    let s = 1.0 / (12.0 * h);
    let mut d = vec![C64::new(0.0, 0.0); n];
    d[0] = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) * s;
    d[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) * s;
    for i in 2..n - 2 {
        d[i] = (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) * s;
    }
    d[n - 2] = (3.0 * f[n - 1] + 10.0 * f[n - 2] - 18.0 * f[n - 3] + 6.0 * f[n - 4] - f[n - 5]) * s;
    d[n - 1] = (25.0 * f[n - 1] - 48.0 * f[n - 2] + 36.0 * f[n - 3] - 16.0 * f[n - 4] + 3.0 * f[n - 5]) * s;
    Ok(d)
}

/// `AΨ = (εΨ' − iε̇xΨ)/√2` on a uniform grid.
pub fn apply_a(point: &EpsilonPoint, grid: &SpatialGrid, psi: &[C64]) -> Result<Vec<C64>> {
    let x = grid.axis();
    check_len(&x, psi)?;
    let d = derivative(psi, grid.dx())?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Ok((0..psi.len())
        .map(|i| s * (point.eps * d[i] - C64::new(0.0, 1.0) * point.eps_dot * x[i] * psi[i]))
        .collect())
}

/// `A†Ψ = (−ε*Ψ' + iε̇*xΨ)/√2` on a uniform grid.
pub fn apply_a_dagger(point: &EpsilonPoint, grid: &SpatialGrid, psi: &[C64]) -> Result<Vec<C64>> {
    let x = grid.axis();
    check_len(&x, psi)?;
    let d = derivative(psi, grid.dx())?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Ok((0..psi.len())
        .map(|i| s * (-point.eps.conj() * d[i] + C64::new(0.0, 1.0) * point.eps_dot.conj() * x[i] * psi[i]))
        .collect())
}

fn check_len(x: &[f64], psi: &[C64]) -> Result<()> {
    if x.len() != psi.len() {
        return Err(Error::DimensionMismatch(format!("{} samples on a {}-point grid", psi.len(), x.len())));
    }
    Ok(())
}

/// Floquet data of a periodic profile.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quasienergy {
    /// Reduced-zone value in `[0, π/T]`; absent for unstable profiles.
    pub kappa: Option<f64>,
    pub stable: bool,
    pub trace: f64,
    pub multipliers: [C64; 2],
}

/// Monodromy analysis over one period `T`, using `(Re ε, Im ε)` as the real
/// fundamental pair.
pub fn quasienergy(profile: &FrequencyProfile, period: f64) -> Result<Quasienergy> {
    quasienergy_with_steps(profile, period, profile.default_steps(period))
}

pub fn quasienergy_with_steps(profile: &FrequencyProfile, period: f64, n_steps: usize) -> Result<Quasienergy> {
    profile.validate()?;
    profile.check_period(period)?;
    let end = solve_epsilon(profile, period, n_steps)?.last();
    let monodromy = Matrix2::new(end.eps.re, end.eps.im, end.eps_dot.re, end.eps_dot.im);
    let trace = monodromy.trace();
    let det = monodromy.determinant();
    let disc = C64::new(0.25 * trace * trace - det, 0.0).sqrt();
    let multipliers = [0.5 * trace + disc, 0.5 * trace - disc];
    let stable = trace.abs() <= 2.0 + STABILITY_SLACK;
    let kappa = stable.then(|| (0.5 * trace).clamp(-1.0, 1.0).acos() / period);
    Ok(Quasienergy { kappa, stable, trace, multipliers })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn named_closed_forms() {
        for (profile, f) in [
            (FrequencyProfile::harmonic(), (|t: f64| C64::new(0.0, t).exp()) as fn(f64) -> C64),
            (FrequencyProfile::Free, |t| C64::new(1.0, t)),
            (FrequencyProfile::Repulsive, |t| C64::new(t.cosh(), t.sinh())),
        ] {
            let traj = solve_epsilon(&profile, 5.0, 500).unwrap();
            for p in traj.points() {
                assert!(close(p.eps, f(p.t), 1e-12 * f(p.t).norm()), "{profile:?} at {}", p.t);
            }
        }
    }

    #[test]
    fn harmonic_phase_is_time() {
        let traj = solve_epsilon(&FrequencyProfile::harmonic(), 20.0, 2000).unwrap();
        assert!((traj.last().phase - 20.0).abs() < 1e-10);
    }

    #[test]
    fn variance_examples() {
        let v = variances(C64::new(0.0, 0.7).exp(), C64::new(0.0, 1.0) * C64::new(0.0, 0.7).exp());
        assert!((v.sigma_x - 0.5).abs() < 1e-15 && (v.sigma_p - 0.5).abs() < 1e-15);
        assert!(v.sigma_xp.abs() < 1e-15 && v.r.abs() < 1e-15);
        let t = 1.7;
        let v = variances(C64::new(1.0, t), C64::new(0.0, 1.0));
        assert!((v.sigma_x - 0.5 * (1.0 + t * t)).abs() < 1e-15);
        assert!((v.sigma_xp - 0.5 * t).abs() < 1e-15);
        assert!((v.sigma_x * v.sigma_p - v.sigma_xp.powi(2) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn too_few_steps_rejected() {
        let err = solve_epsilon(&FrequencyProfile::harmonic(), 10.0, 50).unwrap_err();
        assert_eq!(err.name(), "InvalidArgument");
    }

    #[test]
    fn mathieu_wronskian_with_default_steps() {
        let profile = FrequencyProfile::CosineModulated { omega0_sq: 1.0, depth: 0.5, modulation_frequency: 2.0 };
        let traj = solve_epsilon(&profile, 50.0, profile.default_steps(50.0)).unwrap();
        assert!(traj.max_wronskian_defect() <= WRONSKIAN_TOL);
    }

    #[test]
    fn ground_state_at_start() {
        let p = EpsilonPoint::initial();
        for x in [-1.0, 0.0, 0.3, 2.0] {
            let v = ground_wavefunction(&p, x).unwrap();
            assert!(close(v, C64::new(PI.powf(-0.25) * (-0.5 * x * x).exp(), 0.0), 1e-15));
        }
        assert_eq!(number_wavefunction(&p, 1, 0.0).unwrap(), C64::new(0.0, 0.0));
    }

    #[test]
    fn piecewise_matches_constant() {
        let seg = |d, w| FrequencySegment { duration: d, omega_sq: w };
        let pw = FrequencyProfile::PiecewiseConstant { segments: vec![seg(0.5, 1.0), seg(1.0, 1.0)], periodic: true };
        let a = solve_epsilon(&pw, 7.3, 800).unwrap().last();
        let b = solve_epsilon(&FrequencyProfile::harmonic(), 7.3, 800).unwrap().last();
        assert!(close(a.eps, b.eps, 1e-12) && close(a.eps_dot, b.eps_dot, 1e-12));
    }

    #[test]
    fn harmonic_quasienergy_is_reduced_zero() {
        let q = quasienergy(&FrequencyProfile::harmonic(), TAU).unwrap();
        assert!(q.stable);
        let k = q.kappa.unwrap();
        // κ = 1 modulo 2π/T = 1
        let wrapped = (k - 1.0).rem_euclid(1.0);
        assert!(wrapped.min(1.0 - wrapped) < 1e-6);
        for m in q.multipliers {
            assert!(close(m, C64::new(1.0, 0.0), 1e-6));
        }
    }

    #[test]
    fn period_must_fit() {
        let p = FrequencyProfile::CosineModulated { omega0_sq: 1.0, depth: 0.2, modulation_frequency: 2.0 };
        assert!(p.check_period(PI).is_ok());
        assert!(p.check_period(2.0 * PI).is_ok());
        assert_eq!(p.check_period(1.0).unwrap_err().name(), "NotPeriodic");
        let seg = FrequencySegment { duration: 1.0, omega_sq: 2.0 };
        let open = FrequencyProfile::PiecewiseConstant {
            segments: vec![seg, FrequencySegment { duration: 1.0, omega_sq: 1.0 }],
            periodic: false,
        };
        assert_eq!(open.check_period(2.0).unwrap_err().name(), "NotPeriodic");
    }

    #[test]
    fn profile_json_shape() {
        let p: FrequencyProfile =
            serde_json::from_str(r#"{"kind":"cosine_modulated","omega0_sq":1.0,"depth":0.2,"modulation_frequency":0.7}"#)
                .unwrap();
        assert_eq!(p.omega_sq(0.0), 1.2);
        assert!(serde_json::from_str::<FrequencyProfile>(r#"{"kind":"constant","omega_sq":1.0,"extra":1}"#).is_err());
    }
}
