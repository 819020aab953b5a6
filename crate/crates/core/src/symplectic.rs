//! Linear integrals of motion of N-mode quadratic Hamiltonians.
//!
//! Phase-space vectors are ordered `Q = (p₁ … p_N, q₁ … q_N)` and the
//! Hamiltonian is `H = ½ QᵀB(t)Q + C(t)ᵀQ` with `ħ = 1`. The integrals of
//! motion `Q₀(t) = Λ(t)Q + Δ(t)` satisfy
//!
//! ```text
//! Λ̇ = Λ Σ B(t),   Λ(0) = 1
//! Δ̇ = Λ Σ C(t),   Δ(0) = 0
//! ```
//!
//! with `Σ = [[0, I], [−I, 0]]`. In the ladder-operator representation
//! `A = (a₁ … a_N, a₁† … a_N†)`, `a = (q + ip)/√2`, so that `Q = U A` with
//!
//! ```text
//! U = 1/√2 [[−iI, iI], [I, I]]
//! ```
//!
//! the Hamiltonian reads `H = ½ AᵀD A + EᵀA` with `D = UᵀBU`, `E = UᵀC`, and
//! the integrals of motion `A₀ = M A + N` obey `Ṁ = MσD`, `Ṅ = MσE` where
//! `σ = U†ΣU* = [[0, iI], [−iI, 0]]`.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    asymmetry, expm, inverse_checked, matrix_from_rows, matrix_to_rows, max_abs, max_abs_vec,
    rk4_left_linear, to_complex, to_complex_vec,
};

/// Default bound on `‖ΛΣΛᵀ − Σ‖∞` accepted when a propagator is built.
pub const DEFAULT_TOL_SYMP: f64 = 1e-9;

/// Entries of `B − Bᵀ` above this are rejected.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Imaginary residue allowed when mapping a complex propagator back to real.
pub const REALITY_TOL: f64 = 1e-10;

/// RK4 steps per unit of `t·‖B‖` used by [`default_steps`].
pub const STEPS_PER_UNIT: f64 = 200.0;

/// The fixed structure matrices of an N-mode phase space.
#[derive(Clone, Debug, PartialEq)]
pub struct SymplecticForm {
    n_modes: usize,
    matrix: DMatrix<f64>,
}

impl SymplecticForm {
    pub fn new(n_modes: usize) -> Self {
        let n = n_modes;
        let mut matrix = DMatrix::zeros(2 * n, 2 * n);
        for j in 0..n {
            matrix[(j, n + j)] = 1.0;
            matrix[(n + j, j)] = -1.0;
        }
        Self { n_modes, matrix }
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    /// `Σ = [[0, I], [−I, 0]]`.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// `σ = [[0, iI], [−iI, 0]]`, the form preserved by the ladder-operator
    /// propagator.
    pub fn complex(&self) -> DMatrix<C64> {
        let n = self.n_modes;
        let mut s = DMatrix::zeros(2 * n, 2 * n);
        for j in 0..n {
            s[(j, n + j)] = C64::i();
            s[(n + j, j)] = -C64::i();
        }
        s
    }

    /// `σ_Nx = [[0, I], [I, 0]]`, swapping the `a` and `a†` halves.
    pub fn mode_swap(&self) -> DMatrix<C64> {
        let n = self.n_modes;
        let mut s = DMatrix::zeros(2 * n, 2 * n);
        for j in 0..n {
            s[(j, n + j)] = C64::new(1.0, 0.0);
            s[(n + j, j)] = C64::new(1.0, 0.0);
        }
        s
    }

    /// The unitary `U` with `Q = U A`.
    pub fn unitary(&self) -> DMatrix<C64> {
        let n = self.n_modes;
        let h = FRAC_1_SQRT_2;
        let mut u = DMatrix::zeros(2 * n, 2 * n);
        for j in 0..n {
            u[(j, j)] = C64::new(0.0, -h);
            u[(j, n + j)] = C64::new(0.0, h);
            u[(n + j, j)] = C64::new(h, 0.0);
            u[(n + j, n + j)] = C64::new(h, 0.0);
        }
        u
    }
}

pub type MatrixFn = Arc<dyn Fn(f64) -> DMatrix<f64> + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(f64) -> DVector<f64> + Send + Sync>;

#[derive(Clone)]
pub enum HamiltonianKind {
    TimeIndependent { b: DMatrix<f64>, c: DVector<f64> },
    TimeDependent { b: MatrixFn, c: VectorFn },
}

/// `H = ½ QᵀB(t)Q + C(t)ᵀQ`.
#[derive(Clone)]
pub struct QuadraticHamiltonian {
    n_modes: usize,
    kind: HamiltonianKind,
    /// Times where `B` or `C` jump; integration never steps across them.
    breakpoints: Vec<f64>,
}

impl fmt::Debug for QuadraticHamiltonian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.kind {
            HamiltonianKind::TimeIndependent { .. } => "TimeIndependent",
            HamiltonianKind::TimeDependent { .. } => "TimeDependent",
        };
        f.debug_struct("QuadraticHamiltonian")
            .field("n_modes", &self.n_modes)
            .field("kind", &kind)
            .field("breakpoints", &self.breakpoints)
            .finish()
    }
}

impl QuadraticHamiltonian {
    pub fn time_independent(b: DMatrix<f64>, c: DVector<f64>) -> Result<Self> {
        let n_modes = b.nrows() / 2;
        check_coefficients(n_modes, &b, &c, 0.0)?;
        Ok(Self { n_modes, kind: HamiltonianKind::TimeIndependent { b, c }, breakpoints: Vec::new() })
    }

    /// A Hamiltonian whose coefficients are arbitrary functions of time. The
    /// callables are validated lazily, each time they are sampled.
    pub fn time_dependent<B, C>(n_modes: usize, b: B, c: C) -> Result<Self>
    where
        B: Fn(f64) -> DMatrix<f64> + Send + Sync + 'static,
        C: Fn(f64) -> DVector<f64> + Send + Sync + 'static,
    {
        if n_modes == 0 {
            return Err(Error::InvalidArgument("n_modes must be positive".into()));
        }
        Ok(Self {
            n_modes,
            kind: HamiltonianKind::TimeDependent { b: Arc::new(b), c: Arc::new(c) },
            breakpoints: Vec::new(),
        })
    }

    pub fn with_breakpoints(mut self, mut breakpoints: Vec<f64>) -> Self {
        breakpoints.retain(|t| t.is_finite());
        breakpoints.sort_by(f64::total_cmp);
        breakpoints.dedup();
        self.breakpoints = breakpoints;
        self
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn kind(&self) -> &HamiltonianKind {
        &self.kind
    }

    pub fn is_time_independent(&self) -> bool {
        matches!(self.kind, HamiltonianKind::TimeIndependent { .. })
    }

    /// `B(t)`, checked for shape and symmetry.
    pub fn b_at(&self, t: f64) -> Result<DMatrix<f64>> {
        Ok(self.coefficients_at(t)?.0)
    }

    pub fn c_at(&self, t: f64) -> Result<DVector<f64>> {
        Ok(self.coefficients_at(t)?.1)
    }

    fn coefficients_at(&self, t: f64) -> Result<(DMatrix<f64>, DVector<f64>)> {
        match &self.kind {
            HamiltonianKind::TimeIndependent { b, c } => Ok((b.clone(), c.clone())),
            HamiltonianKind::TimeDependent { b, c } => {
                let (b, c) = (b(t), c(t));
                check_coefficients(self.n_modes, &b, &c, t)?;
                Ok((b, c))
            }
        }
    }

    /// Largest Frobenius norm of `B` over a sampling of `[t0, t1]`.
    pub fn norm_bound(&self, t0: f64, t1: f64) -> Result<f64> {
        match &self.kind {
            HamiltonianKind::TimeIndependent { b, .. } => Ok(b.norm()),
            HamiltonianKind::TimeDependent { .. } => {
                const SAMPLES: usize = 64;
                let mut best = 0.0_f64;
                for k in 0..=SAMPLES {
                    let t = t0 + (t1 - t0) * k as f64 / SAMPLES as f64;
                    best = best.max(self.b_at(t)?.norm());
                }
                for &t in self.breakpoints.iter().filter(|&&t| t >= t0 && t <= t1) {
                    best = best.max(self.b_at(t)?.norm());
                }
                Ok(best)
            }
        }
    }

    pub fn from_config(config: &HamiltonianConfig) -> Result<Self> {
        let n = config.n_modes;
        if n == 0 {
            return Err(Error::InvalidArgument("n_modes must be positive".into()));
        }
        let c = if config.c.is_empty() {
            DVector::zeros(2 * n)
        } else {
            DVector::from_vec(config.c.clone())
        };
        if c.len() != 2 * n {
            return Err(Error::DimensionMismatch(format!("C has length {}, expected {}", c.len(), 2 * n)));
        }
        match &config.b {
            BConfig::Constant { matrix } => Self::time_independent(matrix_from_rows(matrix)?, c),
            BConfig::CosineModulated { base, amplitude, frequency, phase } => {
                let base = matrix_from_rows(base)?;
                let amplitude = matrix_from_rows(amplitude)?;
                check_coefficients(n, &base, &c, 0.0)?;
                check_coefficients(n, &amplitude, &c, 0.0)?;
                let (w, phi) = (*frequency, *phase);
                Self::time_dependent(n, move |t| &base + &amplitude * (w * t + phi).cos(), move |_| c.clone())
            }
            BConfig::Piecewise { segments, periodic } => {
                if segments.is_empty() || segments.iter().any(|s| !(s.duration > 0.0)) {
                    return Err(Error::InvalidArgument("piecewise segments need positive durations".into()));
                }
                let mut mats = Vec::with_capacity(segments.len());
                let mut ends = Vec::with_capacity(segments.len());
                let mut acc = 0.0;
                for s in segments {
                    let m = matrix_from_rows(&s.matrix)?;
                    check_coefficients(n, &m, &c, acc)?;
                    acc += s.duration;
                    mats.push(m);
                    ends.push(acc);
                }
                let total = acc;
                let periodic = *periodic;
                let lookup_ends = ends.clone();
                let b = move |t: f64| {
                    let local = if periodic { t.rem_euclid(total) } else { t };
                    let idx = lookup_ends.iter().position(|&e| local < e).unwrap_or(mats.len() - 1);
                    mats[idx].clone()
                };
                // Breakpoints for the first few hundred periods are plenty for
                // any horizon the integrator is asked to cover.
                let mut breakpoints = ends.clone();
                if periodic {
                    for k in 1..512 {
                        breakpoints.extend(ends.iter().map(|e| e + k as f64 * total));
                    }
                }
                Ok(Self::time_dependent(n, b, move |_| c.clone())?.with_breakpoints(breakpoints))
            }
        }
    }
}

fn check_coefficients(n_modes: usize, b: &DMatrix<f64>, c: &DVector<f64>, time: f64) -> Result<()> {
    let dim = 2 * n_modes;
    if n_modes == 0 || b.nrows() != dim || b.ncols() != dim || c.len() != dim {
        return Err(Error::DimensionMismatch(format!(
            "expected B {dim}x{dim} and C of length {dim}, got B {}x{} and C of length {}",
            b.nrows(),
            b.ncols(),
            c.len()
        )));
    }
    let asym = asymmetry(b);
    if !(asym < SYMMETRY_TOL) {
        return Err(Error::NonSymmetricB { time, asymmetry: asym });
    }
    Ok(())
}

/// Declarative Hamiltonian description used by the CLI.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianConfig {
    pub n_modes: usize,
    #[serde(rename = "B")]
    pub b: BConfig,
    /// Constant linear drive; empty means zero.
    #[serde(rename = "C", default)]
    pub c: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BConfig {
    Constant {
        matrix: Vec<Vec<f64>>,
    },
    /// `B(t) = base + amplitude·cos(frequency·t + phase)`.
    CosineModulated {
        base: Vec<Vec<f64>>,
        amplitude: Vec<Vec<f64>>,
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
    Piecewise {
        segments: Vec<PiecewiseSegment>,
        #[serde(default)]
        periodic: bool,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PiecewiseSegment {
    pub duration: f64,
    pub matrix: Vec<Vec<f64>>,
}

/// Real-quadrature integrals of motion `Q₀ = ΛQ + Δ` at a given time.
#[derive(Clone, Debug, PartialEq)]
pub struct PropagatorReal {
    lambda: DMatrix<f64>,
    delta: DVector<f64>,
    time: f64,
}

impl PropagatorReal {
    pub fn new(lambda: DMatrix<f64>, delta: DVector<f64>, time: f64) -> Result<Self> {
        Self::with_tolerance(lambda, delta, time, DEFAULT_TOL_SYMP)
    }

    /// Builds the propagator, failing if `‖ΛΣΛᵀ − Σ‖∞ > tol`.
    pub fn with_tolerance(lambda: DMatrix<f64>, delta: DVector<f64>, time: f64, tol: f64) -> Result<Self> {
        if delta.len() != lambda.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "Λ is {}x{} but Δ has length {}",
                lambda.nrows(),
                lambda.ncols(),
                delta.len()
            )));
        }
        let defect = symplectic_defect(&lambda)?;
        if !(defect <= tol) {
            return Err(Error::SymplecticDriftExceeded { defect, tolerance: tol });
        }
        Ok(Self { lambda, delta, time })
    }

    pub fn identity(n_modes: usize) -> Self {
        let dim = 2 * n_modes;
        Self { lambda: DMatrix::identity(dim, dim), delta: DVector::zeros(dim), time: 0.0 }
    }

    pub fn n_modes(&self) -> usize {
        self.lambda.nrows() / 2
    }

    pub fn lambda(&self) -> &DMatrix<f64> {
        &self.lambda
    }

    pub fn delta(&self) -> &DVector<f64> {
        &self.delta
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn defect(&self) -> f64 {
        symplectic_defect(&self.lambda).expect("shape checked on construction")
    }

    pub fn determinant(&self) -> f64 {
        self.lambda.clone().lu().determinant()
    }

    /// `ΛQ + Δ`, the initial-time phase-space point of the trajectory that
    /// passes through `Q` at this time.
    pub fn apply(&self, point: &DVector<f64>) -> DVector<f64> {
        &self.lambda * point + &self.delta
    }

    /// The map `Q₀ ↦ Q`, i.e. `(Λ⁻¹, −Λ⁻¹Δ)`.
    pub fn inverse(&self) -> Result<Self> {
        let inv = inverse_checked(&self.lambda, "Λ")?;
        let delta = -(&inv * &self.delta);
        Ok(Self { lambda: inv, delta, time: -self.time })
    }

    /// Propagator of evolving first by `self` and then by `later`
    /// (`later` measured from the end of `self`).
    pub fn then(&self, later: &PropagatorReal) -> Result<Self> {
        if later.n_modes() != self.n_modes() {
            return Err(Error::DimensionMismatch("composing propagators of different size".into()));
        }
        Ok(Self {
            lambda: &self.lambda * &later.lambda,
            delta: &self.lambda * &later.delta + &self.delta,
            time: self.time + later.time,
        })
    }

    pub fn to_record(&self) -> PropagatorRecord {
        PropagatorRecord {
            n_modes: self.n_modes(),
            time: self.time,
            lambda: matrix_to_rows(&self.lambda),
            delta: self.delta.iter().copied().collect(),
        }
    }

    pub fn from_record(record: &PropagatorRecord, tol: f64) -> Result<Self> {
        let lambda = matrix_from_rows(&record.lambda)?;
        if lambda.nrows() != 2 * record.n_modes {
            return Err(Error::DimensionMismatch("Λ does not match n_modes".into()));
        }
        Self::with_tolerance(lambda, DVector::from_vec(record.delta.clone()), record.time, tol)
    }
}

/// JSON form of a real propagator: row-major `lambda`, plus `delta` and `time`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropagatorRecord {
    pub n_modes: usize,
    pub time: f64,
    pub lambda: Vec<Vec<f64>>,
    pub delta: Vec<f64>,
}

/// Ladder-operator integrals of motion `A₀ = M A + N`.
#[derive(Clone, Debug, PartialEq)]
pub struct PropagatorComplex {
    m: DMatrix<C64>,
    n_vec: DVector<C64>,
    time: f64,
}

impl PropagatorComplex {
    pub fn new(m: DMatrix<C64>, n_vec: DVector<C64>, time: f64) -> Result<Self> {
        Self::with_tolerance(m, n_vec, time, DEFAULT_TOL_SYMP)
    }

    pub fn with_tolerance(m: DMatrix<C64>, n_vec: DVector<C64>, time: f64, tol: f64) -> Result<Self> {
        if n_vec.len() != m.nrows() {
            return Err(Error::DimensionMismatch("M and N sizes differ".into()));
        }
        let defect = complex_symplectic_defect(&m)?;
        if !(defect <= tol) {
            return Err(Error::SymplecticDriftExceeded { defect, tolerance: tol });
        }
        Ok(Self { m, n_vec, time })
    }

    pub fn n_modes(&self) -> usize {
        self.m.nrows() / 2
    }

    pub fn m(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn n_vec(&self) -> &DVector<C64> {
        &self.n_vec
    }

    pub fn time(&self) -> f64 {
        self.time
    }
}

/// `‖ΛΣΛᵀ − Σ‖∞`, elementwise maximum.
pub fn symplectic_defect(lambda: &DMatrix<f64>) -> Result<f64> {
    let n = square_even(lambda.nrows(), lambda.ncols())?;
    let sigma = SymplecticForm::new(n);
    let s = sigma.matrix();
    Ok(max_abs(&(lambda * s * lambda.transpose() - s)))
}

/// `‖MσMᵀ − σ‖∞` for the ladder-operator propagator.
pub fn complex_symplectic_defect(m: &DMatrix<C64>) -> Result<f64> {
    let n = square_even(m.nrows(), m.ncols())?;
    let sigma = SymplecticForm::new(n).complex();
    Ok(max_abs(&(m * &sigma * m.transpose() - &sigma)))
}

fn square_even(rows: usize, cols: usize) -> Result<usize> {
    if rows != cols || rows == 0 || !rows.is_multiple_of(2) {
        return Err(Error::DimensionMismatch(format!("expected a square 2N×2N matrix, got {rows}x{cols}")));
    }
    Ok(rows / 2)
}

/// `ceil(200·t·max‖B‖)`, at least one step.
pub fn default_steps(h: &QuadraticHamiltonian, t_final: f64) -> Result<usize> {
    let bound = h.norm_bound(0.0, t_final.max(0.0))?;
    Ok(((STEPS_PER_UNIT * t_final.abs() * bound).ceil() as usize).max(1))
}

/// Integrates `Λ̇ = ΛΣB(t)`, `Δ̇ = ΛΣC(t)` from 0 to `t_final` with
/// fixed-step RK4.
pub fn evolve_real(h: &QuadraticHamiltonian, t_final: f64, n_steps: usize) -> Result<PropagatorReal> {
    evolve_real_between(h, 0.0, t_final, n_steps, DEFAULT_TOL_SYMP)
}

/// Like [`evolve_real`] but over `[t_start, t_end]` (the propagator is the
/// identity at `t_start`) and with an explicit symplectic tolerance.
pub fn evolve_real_between(
    h: &QuadraticHamiltonian,
    t_start: f64,
    t_end: f64,
    n_steps: usize,
    tol: f64,
) -> Result<PropagatorReal> {
    check_interval(t_start, t_end, n_steps)?;
    let n = h.n_modes();
    let dim = 2 * n;
    let sigma = SymplecticForm::new(n).matrix().clone();

    let mut state = DMatrix::<f64>::zeros(dim, dim + 1);
    state.view_mut((0, 0), (dim, dim)).fill_with_identity();

    let generator = |t: f64| -> Result<DMatrix<f64>> {
        let (b, c) = h.coefficients_at(t)?;
        let mut g = DMatrix::zeros(dim, dim + 1);
        g.view_mut((0, 0), (dim, dim)).copy_from(&(&sigma * b));
        g.set_column(dim, &(&sigma * c));
        Ok(g)
    };
    state = integrate_segments(state, h, t_start, t_end, n_steps, generator)?;

    let lambda = state.columns(0, dim).into_owned();
    let delta = state.column(dim).into_owned();
    PropagatorReal::with_tolerance(lambda, delta, t_end - t_start, tol)
}

/// Integrates `Ṁ = MσD(t)`, `Ṅ = MσE(t)` from 0 to `t_final` with
/// fixed-step RK4, where `D = UᵀBU` and `E = UᵀC`.
pub fn evolve_complex(h: &QuadraticHamiltonian, t_final: f64, n_steps: usize) -> Result<PropagatorComplex> {
    evolve_complex_with(h, t_final, n_steps, DEFAULT_TOL_SYMP)
}

pub fn evolve_complex_with(
    h: &QuadraticHamiltonian,
    t_final: f64,
    n_steps: usize,
    tol: f64,
) -> Result<PropagatorComplex> {
    check_interval(0.0, t_final, n_steps)?;
    let n = h.n_modes();
    let dim = 2 * n;
    let form = SymplecticForm::new(n);
    let sigma = form.complex();
    let u = form.unitary();

    let mut state = DMatrix::<C64>::zeros(dim, dim + 1);
    state.view_mut((0, 0), (dim, dim)).fill_with_identity();

    let generator = |t: f64| -> Result<DMatrix<C64>> {
        let (b, c) = h.coefficients_at(t)?;
        let (d, e) = ladder_coefficients_with(&u, &b, &c);
        let mut g = DMatrix::zeros(dim, dim + 1);
        g.view_mut((0, 0), (dim, dim)).copy_from(&(&sigma * d));
        g.set_column(dim, &(&sigma * e));
        Ok(g)
    };
    state = integrate_segments(state, h, 0.0, t_final, n_steps, generator)?;

    let m = state.columns(0, dim).into_owned();
    let n_vec = state.column(dim).into_owned();
    PropagatorComplex::with_tolerance(m, n_vec, t_final, tol)
}

fn check_interval(t_start: f64, t_end: f64, n_steps: usize) -> Result<()> {
    if !t_start.is_finite() || !t_end.is_finite() || t_end < t_start {
        return Err(Error::InvalidArgument(format!("invalid time interval [{t_start}, {t_end}]")));
    }
    if n_steps == 0 {
        return Err(Error::InvalidArgument("n_steps must be at least 1".into()));
    }
    Ok(())
}

/// Runs RK4 over `[t_start, t_end]`, splitting at the Hamiltonian's
/// breakpoints so that no step straddles a jump. Steps are shared out in
/// proportion to sub-interval length, at least one each.
fn integrate_segments<T, G>(
    mut state: DMatrix<T>,
    h: &QuadraticHamiltonian,
    t_start: f64,
    t_end: f64,
    n_steps: usize,
    mut generator: G,
) -> Result<DMatrix<T>>
where
    T: nalgebra::ComplexField<RealField = f64>,
    G: FnMut(f64) -> Result<DMatrix<T>>,
{
    if t_end == t_start {
        return Ok(state);
    }
    let mut cuts = vec![t_start];
    cuts.extend(h.breakpoints.iter().copied().filter(|&b| b > t_start && b < t_end));
    cuts.push(t_end);
    let span = t_end - t_start;
    for w in cuts.windows(2) {
        let steps = ((n_steps as f64 * (w[1] - w[0]) / span).ceil() as usize).max(1);
        // Evaluate each sub-interval's coefficients strictly inside it so the
        // piecewise lookup picks the segment being integrated.
        let (a, b) = (w[0], w[1]);
        let eps = 1e-12 * (b - a);
        state = rk4_left_linear(state, a, b, steps, |t| generator(t.clamp(a + eps, b - eps)))?;
    }
    Ok(state)
}

/// Exact propagator for time-independent coefficients:
/// `Λ = exp(ΣBt)` and `Δ = ∫₀ᵗ exp(ΣBτ) ΣC dτ`.
///
/// Both come out of a single exponential of the augmented generator
/// `[[ΣB, ΣC], [0, 0]]·t`, whose top-right column is the integral.
pub fn propagator_const(b: &DMatrix<f64>, c: &DVector<f64>, t: f64) -> Result<PropagatorReal> {
    propagator_const_with(b, c, t, DEFAULT_TOL_SYMP)
}

pub fn propagator_const_with(b: &DMatrix<f64>, c: &DVector<f64>, t: f64, tol: f64) -> Result<PropagatorReal> {
    let n = b.nrows() / 2;
    check_coefficients(n, b, c, 0.0)?;
    let sigma = SymplecticForm::new(n).matrix().clone();
    let (lambda, delta) = augmented_exponential(&(&sigma * b), &(&sigma * c), t);
    PropagatorReal::with_tolerance(lambda, delta, t, tol)
}

/// Exact ladder-operator propagator for constant `D`, `E`:
/// `M = exp(σDt)`, `N = ∫₀ᵗ exp(σDτ) σE dτ`.
pub fn propagator_const_complex(d: &DMatrix<C64>, e: &DVector<C64>, t: f64) -> Result<PropagatorComplex> {
    let n = square_even(d.nrows(), d.ncols())?;
    if e.len() != d.nrows() {
        return Err(Error::DimensionMismatch("D and E sizes differ".into()));
    }
    let sigma = SymplecticForm::new(n).complex();
    let (m, n_vec) = augmented_exponential(&(&sigma * d), &(&sigma * e), t);
    PropagatorComplex::new(m, n_vec, t)
}

fn augmented_exponential<T>(a: &DMatrix<T>, v: &DVector<T>, t: f64) -> (DMatrix<T>, DVector<T>)
where
    T: nalgebra::ComplexField<RealField = f64>,
{
    let dim = a.nrows();
    let mut aug = DMatrix::<T>::zeros(dim + 1, dim + 1);
    aug.view_mut((0, 0), (dim, dim)).copy_from(a);
    aug.view_mut((0, dim), (dim, 1)).copy_from(v);
    let e = expm(&(aug * T::from_real(t)));
    (e.view((0, 0), (dim, dim)).into_owned(), e.view((0, dim), (dim, 1)).column(0).into_owned())
}

/// `D = UᵀBU`, `E = UᵀC`.
pub fn ladder_coefficients(b: &DMatrix<f64>, c: &DVector<f64>) -> (DMatrix<C64>, DVector<C64>) {
    let u = SymplecticForm::new(b.nrows() / 2).unitary();
    ladder_coefficients_with(&u, b, c)
}

fn ladder_coefficients_with(u: &DMatrix<C64>, b: &DMatrix<f64>, c: &DVector<f64>) -> (DMatrix<C64>, DVector<C64>) {
    let ut = u.transpose();
    (&ut * to_complex(b) * u, &ut * to_complex_vec(c))
}

/// `M = U†ΛU`, `N = U†Δ`.
pub fn real_to_complex(p: &PropagatorReal) -> Result<PropagatorComplex> {
    let u = SymplecticForm::new(p.n_modes()).unitary();
    let ud = u.adjoint();
    let m = &ud * to_complex(&p.lambda) * &u;
    let n_vec = &ud * to_complex_vec(&p.delta);
    // The conversion is unitary, so it cannot create symplectic drift beyond
    // round-off; keep the source's tolerance budget.
    let tol = DEFAULT_TOL_SYMP.max(2.0 * p.defect());
    PropagatorComplex::with_tolerance(m, n_vec, p.time, tol)
}

/// `Λ = U M U†`, `Δ = U N`; fails if the result is not real.
pub fn complex_to_real(p: &PropagatorComplex) -> Result<PropagatorReal> {
    let u = SymplecticForm::new(p.n_modes()).unitary();
    let ud = u.adjoint();
    let lambda_c = &u * &p.m * &ud;
    let delta_c = &u * &p.n_vec;
    let residue = max_abs(&lambda_c.map(|z| C64::new(z.im, 0.0)))
        .max(max_abs_vec(&delta_c.map(|z| C64::new(z.im, 0.0))));
    if residue > REALITY_TOL {
        return Err(Error::NonRealResult { residue });
    }
    let lambda = lambda_c.map(|z| z.re);
    let delta = delta_c.map(|z| z.re);
    let tol = DEFAULT_TOL_SYMP.max(2.0 * complex_symplectic_defect(&p.m)?);
    PropagatorReal::with_tolerance(lambda, delta, p.time, tol)
}
