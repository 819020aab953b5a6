//! Mixed multimode Gaussian states in phase space.
//!
//! A state is fixed by its quadrature means `⟨Q⟩ = (⟨p⟩, ⟨q⟩)` and its
//! symmetric dispersion matrix `M`. The Wigner function is
//!
//! ```text
//! W(Q) = det(M)^(-1/2) · exp(−½ (Q − ⟨Q⟩)ᵀ M⁻¹ (Q − ⟨Q⟩))
//! ```
//!
//! normalised against the phase-space measure `∏ dp_j dq_j / 2π`, so the
//! vacuum takes the value 2 at the origin.
//!
//! The Husimi function is written in the ladder variables
//! `B = (β, β*)`, `β = (q + ip)/√2`, as
//!
//! ```text
//! Q(B) = P₀ · exp(−½ Bᵀ(R + σ_Nx)B + Bᵀ(Ry))
//! ```
//!
//! with `R = 2Uᵀ(I + 2M)⁻¹U − σ_Nx`, `Ry = 2Uᵀ(I + 2M)⁻¹⟨Q⟩` and
//! `P₀ = det(M + ½)^(-1/2) · exp(−⟨Q⟩ᵀ(2M + I)⁻¹⟨Q⟩)`. The same `(R, Ry, P₀)`
//! feed the photon-number distribution.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    asymmetry, hermitian_eigenvalues, inverse_checked, max_abs, max_abs_vec, to_complex, to_complex_vec,
};
use crate::symplectic::{PropagatorReal, SymplecticForm};

/// Smallest eigenvalue of `M + (i/2)Σ` tolerated by the constructor.
pub const UNCERTAINTY_TOL: f64 = 1e-10;

/// Negative mean photon numbers down to this are clamped to zero.
pub const CLAMP_TOL: f64 = 1e-10;

/// A Gaussian state of `n_modes` bosonic modes.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianState {
    n_modes: usize,
    mean: DVector<f64>,
    dispersion: DMatrix<f64>,
}

impl GaussianState {
    /// Validates and builds a state. The dispersion is symmetrised from its
    /// upper triangle.
    pub fn new(mean: DVector<f64>, dispersion: DMatrix<f64>) -> Result<Self> {
        let dim = mean.len();
        if dim == 0 || !dim.is_multiple_of(2) || dispersion.nrows() != dim || dispersion.ncols() != dim {
            return Err(Error::DimensionMismatch(format!(
                "mean of length {dim} with a {}x{} dispersion",
                dispersion.nrows(),
                dispersion.ncols()
            )));
        }
        if mean.iter().chain(dispersion.iter()).any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("non-finite state parameters".into()));
        }
        let mut m = dispersion;
        for i in 0..dim {
            for j in 0..i {
                m[(i, j)] = m[(j, i)];
            }
        }
        let state = Self { n_modes: dim / 2, mean, dispersion: m };
        state.validate()?;
        Ok(state)
    }

    fn validate(&self) -> Result<()> {
        if self.dispersion.clone().cholesky().is_none() {
            return Err(Error::NotPositiveDefinite);
        }
        let min_eigenvalue = self.uncertainty_margin();
        if !(min_eigenvalue >= -UNCERTAINTY_TOL) {
            return Err(Error::UncertaintyViolated { min_eigenvalue });
        }
        Ok(())
    }

    /// Smallest eigenvalue of the Hermitian matrix `M + (i/2)Σ`; physical
    /// states have it nonnegative, pure states have it zero.
    pub fn uncertainty_margin(&self) -> f64 {
        let sigma = SymplecticForm::new(self.n_modes);
        let h = to_complex(&self.dispersion) + sigma.matrix().map(|x| C64::new(0.0, 0.5 * x));
        hermitian_eigenvalues(&h).into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Builds a state from its JSON form: means plus the row-major upper
    /// triangle of the dispersion.
    pub fn from_upper(n_modes: usize, mean: &[f64], upper: &[f64]) -> Result<Self> {
        let dim = 2 * n_modes;
        if mean.len() != dim || upper.len() != dim * (dim + 1) / 2 {
            return Err(Error::DimensionMismatch(format!(
                "{n_modes} modes need {dim} means and {} upper-triangle entries, got {} and {}",
                dim * (dim + 1) / 2,
                mean.len(),
                upper.len()
            )));
        }
        let mut m = DMatrix::zeros(dim, dim);
        let mut k = 0;
        for i in 0..dim {
            for j in i..dim {
                m[(i, j)] = upper[k];
                k += 1;
            }
        }
        Self::new(DVector::from_column_slice(mean), m)
    }

    pub fn dispersion_upper(&self) -> Vec<f64> {
        let dim = 2 * self.n_modes;
        (0..dim).flat_map(|i| (i..dim).map(move |j| (i, j))).map(|ij| self.dispersion[ij]).collect()
    }

    pub fn to_record(&self) -> GaussianStateRecord {
        GaussianStateRecord {
            n_modes: self.n_modes,
            mean: self.mean.iter().copied().collect(),
            dispersion_upper: self.dispersion_upper(),
        }
    }

    pub fn from_record(record: &GaussianStateRecord) -> Result<Self> {
        Self::from_upper(record.n_modes, &record.mean, &record.dispersion_upper)
    }

    pub fn vacuum(n_modes: usize) -> Self {
        let dim = 2 * n_modes;
        Self { n_modes, mean: DVector::zeros(dim), dispersion: DMatrix::identity(dim, dim) * 0.5 }
    }

    /// Coherent state with the given quadrature means.
    pub fn coherent(mean: DVector<f64>) -> Result<Self> {
        let dim = mean.len();
        Self::new(mean, DMatrix::identity(dim, dim) * 0.5)
    }

    /// Coherent state `|α₁ … α_N⟩`, with `α = (q + ip)/√2`.
    pub fn coherent_amplitudes(alpha: &[C64]) -> Result<Self> {
        let n = alpha.len();
        let s = std::f64::consts::SQRT_2;
        let mean = DVector::from_fn(2 * n, |k, _| if k < n { s * alpha[k].im } else { s * alpha[k - n].re });
        Self::coherent(mean)
    }

    /// Thermal state with `n̄` photons per mode.
    pub fn thermal(n_modes: usize, nbar: f64) -> Result<Self> {
        if !(nbar >= 0.0) {
            return Err(Error::InvalidArgument(format!("thermal occupation {nbar} must be nonnegative")));
        }
        let dim = 2 * n_modes;
        Self::new(DVector::zeros(dim), DMatrix::identity(dim, dim) * (nbar + 0.5))
    }

    /// Single-mode squeezed vacuum `M = diag(s/2, 1/(2s))` in `(p, q)` order.
    pub fn squeezed_vacuum(s: f64) -> Result<Self> {
        if !(s > 0.0) {
            return Err(Error::InvalidArgument(format!("squeezing factor {s} must be positive")));
        }
        Self::new(DVector::zeros(2), DMatrix::from_diagonal(&DVector::from_vec(vec![0.5 * s, 0.5 / s])))
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn dispersion(&self) -> &DMatrix<f64> {
        &self.dispersion
    }

    /// `Tr ρ² = det(2M)^(-1/2)`.
    pub fn purity(&self) -> f64 {
        (self.dispersion.clone() * 2.0).determinant().sqrt().recip()
    }

    /// Precomputes `M⁻¹` and the prefactor for repeated evaluation.
    pub fn wigner_evaluator(&self) -> Result<WignerEvaluator> {
        let inv = inverse_checked(&self.dispersion, "M").map_err(|_| Error::SingularDispersion)?;
        let det = self.dispersion.clone().cholesky().ok_or(Error::SingularDispersion)?.determinant();
        Ok(WignerEvaluator { mean: self.mean.clone(), inverse: inv, prefactor: det.sqrt().recip() })
    }

    pub fn wigner(&self, point: &DVector<f64>) -> Result<f64> {
        self.wigner_evaluator()?.eval(point)
    }

    /// State after evolution by `prop`: dispersion `Λ⁻¹MΛ⁻ᵀ`, mean
    /// `Λ⁻¹(⟨Q⟩ − Δ)`. The evolved Wigner function at `Q` equals the input
    /// Wigner function at `ΛQ + Δ`.
    pub fn evolve(&self, prop: &PropagatorReal) -> Result<Self> {
        if prop.n_modes() != self.n_modes {
            return Err(Error::DimensionMismatch(format!(
                "{}-mode propagator applied to a {}-mode state",
                prop.n_modes(),
                self.n_modes
            )));
        }
        let inv = inverse_checked(prop.lambda(), "Λ")?;
        let m = &inv * &self.dispersion * inv.transpose();
        let m = (&m + m.transpose()) * 0.5;
        let mean = &inv * (&self.mean - prop.delta());
        Self::new(mean, m)
    }

    pub fn to_q_params(&self) -> Result<QFunctionParams> {
        self.to_q_params_with(HermiteArgument::default())
    }

    pub fn to_q_params_with(&self, route: HermiteArgument) -> Result<QFunctionParams> {
        let dim = 2 * self.n_modes;
        let form = SymplecticForm::new(self.n_modes);
        let u = form.unitary();
        let ut = u.transpose();
        let id = DMatrix::<f64>::identity(dim, dim);

        let plus = inverse_checked(&(&id + &self.dispersion * 2.0), "I + 2M")?;
        let plus_c = to_complex(&plus);
        let r = (&ut * &plus_c * &u) * C64::new(2.0, 0.0) - form.mode_swap();
        let r = (&r + r.transpose()) * C64::new(0.5, 0.0);

        let mean_c = to_complex_vec(&self.mean);
        let y_from_minus = || -> Result<DVector<C64>> {
            if self.mean.iter().all(|&x| x == 0.0) {
                return Ok(DVector::zeros(dim));
            }
            let minus = inverse_checked(&(&id - &self.dispersion * 2.0), "I - 2M")?;
            Ok(u.adjoint() * to_complex(&minus) * &mean_c * C64::new(2.0, 0.0))
        };
        let (y, ry) = match route {
            HermiteArgument::Resolvent => {
                let ry = &ut * &plus_c * &mean_c * C64::new(2.0, 0.0);
                (y_from_minus().ok(), ry)
            }
            HermiteArgument::ThroughY => {
                let y = y_from_minus()?;
                let ry = &r * &y;
                (Some(y), ry)
            }
        };

        let shifted = &self.dispersion + &id * 0.5;
        let det = shifted.cholesky().ok_or(Error::NotPositiveDefinite)?.determinant();
        let exponent = self.mean.dot(&(&plus * &self.mean));
        let p0 = det.sqrt().recip() * (-exponent).exp();
        QFunctionParams::new(r, y, ry, p0)
    }

    /// Husimi function at the coherent amplitudes `β`.
    pub fn q_function(&self, beta: &[C64]) -> Result<f64> {
        self.to_q_params()?.q_function(beta)
    }

    /// `⟨n_j⟩ = ½(σ_pp + σ_qq − 1) + ½(⟨p⟩² + ⟨q⟩²)`, clamped at zero.
    pub fn mean_photon(&self, j: usize) -> Result<f64> {
        Ok(self.mean_photon_flagged(j)?.0)
    }

    /// As [`mean_photon`](Self::mean_photon); the flag reports whether a tiny
    /// negative value was clamped.
    pub fn mean_photon_flagged(&self, j: usize) -> Result<(f64, bool)> {
        let n = self.n_modes;
        if j >= n {
            return Err(Error::IndexOutOfRange { index: j, limit: n });
        }
        let m = &self.dispersion;
        let v = 0.5 * (m[(j, j)] + m[(n + j, n + j)] - 1.0)
            + 0.5 * (self.mean[j].powi(2) + self.mean[n + j].powi(2));
        if v < 0.0 {
            if v >= -CLAMP_TOL {
                return Ok((0.0, true));
            }
            return Err(Error::InvalidArgument(format!("mean photon number {v:e} is negative")));
        }
        Ok((v, false))
    }
}

/// Recovers the Gaussian state from its Husimi parameters:
/// `M = U(R + σ_Nx)⁻¹Uᵀ − ½`, `⟨Q⟩ = U(R + σ_Nx)⁻¹(Ry)`.
pub fn from_q_params(params: &QFunctionParams) -> Result<GaussianState> {
    let dim = params.r_matrix.nrows();
    let n = dim / 2;
    let form = SymplecticForm::new(n);
    let u = form.unitary();
    let s_inv = inverse_checked(&(&params.r_matrix + form.mode_swap()), "R + σ_Nx")?;
    let m_c = &u * &s_inv * u.transpose() - DMatrix::<C64>::identity(dim, dim) * C64::new(0.5, 0.0);
    let mean_c = &u * &s_inv * &params.ry;

    let residue = max_abs(&m_c.map(|z| C64::new(z.im, 0.0))).max(max_abs_vec(&mean_c.map(|z| C64::new(z.im, 0.0))));
    let scale = 1.0 + max_abs(&m_c).max(max_abs_vec(&mean_c));
    if residue > 1e-10 * scale {
        return Err(Error::NonRealResult { residue });
    }
    let state = GaussianState::new(mean_c.map(|z| z.re), m_c.map(|z| z.re))?;

    let implied = state.to_q_params()?.p0;
    if (implied - params.p0).abs() > 1e-8 * implied.max(1e-300) {
        return Err(Error::InvalidArgument(format!(
            "P0 = {} inconsistent with R and Ry (implied {implied})",
            params.p0
        )));
    }
    Ok(state)
}

/// Selects how the Hermite-polynomial linear coefficient `Ry` is formed.
///
/// `Resolvent` evaluates `Ry = 2Uᵀ(I + 2M)⁻¹⟨Q⟩` directly and is defined for
/// every state. `ThroughY` first forms `y = 2U†(I − 2M)⁻¹⟨Q⟩` and multiplies by
/// `R`; the two agree whenever `I − 2M` is invertible, but `ThroughY` fails
/// for any state with a vacuum-level dispersion eigenvalue (coherent states
/// among them).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HermiteArgument {
    #[default]
    Resolvent,
    ThroughY,
}

/// Parameters `(R, y, P₀)` of the Husimi function.
///
/// `y` itself is only defined when `I − 2M` is invertible; the product `Ry`
/// is always available and is what the Hermite recurrence consumes.
#[derive(Clone, Debug, PartialEq)]
pub struct QFunctionParams {
    pub r_matrix: DMatrix<C64>,
    pub y: Option<DVector<C64>>,
    pub ry: DVector<C64>,
    pub p0: f64,
}

impl QFunctionParams {
    pub fn new(r_matrix: DMatrix<C64>, y: Option<DVector<C64>>, ry: DVector<C64>, p0: f64) -> Result<Self> {
        let dim = r_matrix.nrows();
        if r_matrix.ncols() != dim || !dim.is_multiple_of(2) || ry.len() != dim || y.as_ref().is_some_and(|y| y.len() != dim) {
            return Err(Error::DimensionMismatch("R, y and Ry must share dimension 2N".into()));
        }
        let asym = asymmetry(&r_matrix);
        if asym > 1e-12 * (1.0 + max_abs(&r_matrix)) {
            return Err(Error::AsymmetricR { asymmetry: asym });
        }
        if !(p0 > 0.0 && p0 <= 1.0 + 1e-12) {
            return Err(Error::InvalidArgument(format!("P0 = {p0} outside (0, 1]")));
        }
        Ok(Self { r_matrix, y, ry, p0: p0.min(1.0) })
    }

    pub fn n_modes(&self) -> usize {
        self.r_matrix.nrows() / 2
    }

    /// `P₀ exp(−½Bᵀ(R + σ_Nx)B + BᵀRy)` with `B = (β, β*)`.
    pub fn q_function(&self, beta: &[C64]) -> Result<f64> {
        let n = self.n_modes();
        if beta.len() != n {
            return Err(Error::DimensionMismatch(format!("{} amplitudes for {n} modes", beta.len())));
        }
        let b = DVector::from_fn(2 * n, |k, _| if k < n { beta[k] } else { beta[k - n].conj() });
        let s = &self.r_matrix + SymplecticForm::new(n).mode_swap();
        let quad = b.transpose() * &s * &b;
        let lin = b.transpose() * &self.ry;
        let exponent = -0.5 * quad[(0, 0)] + lin[(0, 0)];
        Ok(self.p0 * exponent.re.exp())
    }
}

/// Cached pieces of a Gaussian Wigner function.
#[derive(Clone, Debug)]
pub struct WignerEvaluator {
    mean: DVector<f64>,
    inverse: DMatrix<f64>,
    prefactor: f64,
}

impl WignerEvaluator {
    pub fn eval(&self, point: &DVector<f64>) -> Result<f64> {
        self.eval_slice(point.as_slice())
    }

    pub fn eval_slice(&self, point: &[f64]) -> Result<f64> {
        let dim = self.mean.len();
        if point.len() != dim {
            return Err(Error::DimensionMismatch(format!(
                "point of length {} for a {dim}-dimensional phase space",
                point.len()
            )));
        }
        let mut quad = 0.0;
        for j in 0..dim {
            let dj = point[j] - self.mean[j];
            let mut row = 0.0;
            for i in 0..dim {
                row += self.inverse[(i, j)] * (point[i] - self.mean[i]);
            }
            quad += dj * row;
        }
        Ok(self.prefactor * (-0.5 * quad).exp())
    }
}

/// JSON form of a [`GaussianState`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianStateRecord {
    pub n_modes: usize,
    pub mean: Vec<f64>,
    pub dispersion_upper: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symplectic::propagator_const;
    use std::f64::consts::{PI, SQRT_2};

    #[test]
    fn vacuum_wigner_values() {
        let v = GaussianState::vacuum(1);
        assert!((v.wigner(&DVector::from_vec(vec![0.0, 0.0])).unwrap() - 2.0).abs() < 1e-15);
        let w = v.wigner(&DVector::from_vec(vec![1.0, 0.0])).unwrap();
        assert!((w - 2.0 * (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn value_at_mean_is_prefactor() {
        let m = DMatrix::from_row_slice(2, 2, &[1.3, 0.4, 0.4, 0.9]);
        let s = GaussianState::new(DVector::from_vec(vec![0.3, -1.1]), m.clone()).unwrap();
        let w = s.wigner(s.mean()).unwrap();
        assert!((w - m.determinant().powf(-0.5)).abs() < 1e-14);
    }

    #[test]
    fn constructor_rejects_unphysical() {
        let too_small = DMatrix::identity(2, 2) * 0.4;
        assert_eq!(GaussianState::new(DVector::zeros(2), too_small).unwrap_err().name(), "UncertaintyViolated");
        let indefinite = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert_eq!(GaussianState::new(DVector::zeros(2), indefinite).unwrap_err().name(), "NotPositiveDefinite");
        assert_eq!(GaussianState::new(DVector::zeros(3), DMatrix::identity(3, 3)).unwrap_err().name(), "DimensionMismatch");
    }

    #[test]
    fn evolve_identity_and_rotation() {
        let s = GaussianState::coherent(DVector::from_vec(vec![0.0, 1.5])).unwrap();
        let same = s.evolve(&PropagatorReal::identity(1)).unwrap();
        assert_eq!(same, s);

        let vac = GaussianState::vacuum(1);
        let rot = propagator_const(&DMatrix::identity(2, 2), &DVector::zeros(2), 0.83).unwrap();
        let out = vac.evolve(&rot).unwrap();
        assert!(max_abs(&(out.dispersion() - vac.dispersion())) < 1e-15);

        let flip = propagator_const(&DMatrix::identity(2, 2), &DVector::zeros(2), PI).unwrap();
        let out = s.evolve(&flip).unwrap();
        assert!((out.mean()[0]).abs() < 1e-14 && (out.mean()[1] + 1.5).abs() < 1e-14);
    }

    #[test]
    fn vacuum_q_params() {
        let p = GaussianState::vacuum(2).to_q_params().unwrap();
        assert!(max_abs(&p.r_matrix) < 1e-15);
        assert!(max_abs_vec(&p.ry) < 1e-15);
        assert_eq!(p.y.as_ref().map(max_abs_vec), Some(0.0));
        assert!((p.p0 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn thermal_p0() {
        for (n, nbar) in [(1, 0.5), (2, 1.7), (3, 0.1)] {
            let p = GaussianState::thermal(n, nbar).unwrap().to_q_params().unwrap();
            assert!((p.p0 - (1.0 + nbar).powi(-(n as i32))).abs() < 1e-14);
        }
    }

    #[test]
    fn vacuum_q_function_is_gaussian() {
        let v = GaussianState::vacuum(1);
        for beta in [C64::new(0.0, 0.0), C64::new(0.7, -0.2), C64::new(-1.5, 2.0)] {
            let q = v.q_function(&[beta]).unwrap();
            assert!((q - (-beta.norm_sqr()).exp()).abs() < 1e-15);
        }
    }

    #[test]
    fn coherent_through_y_is_singular() {
        let s = GaussianState::coherent(DVector::from_vec(vec![0.0, SQRT_2])).unwrap();
        let err = s.to_q_params_with(HermiteArgument::ThroughY).unwrap_err();
        assert_eq!(err.name(), "SingularMatrix");
        let p = s.to_q_params().unwrap();
        assert!(p.y.is_none());
        // Ry = (α, α*) with α = 1
        assert!((p.ry[0] - C64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((p.ry[1] - C64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn routes_agree_off_the_singular_set() {
        let m = DMatrix::from_row_slice(2, 2, &[1.4, 0.3, 0.3, 0.8]);
        let s = GaussianState::new(DVector::from_vec(vec![0.4, -0.9]), m).unwrap();
        let a = s.to_q_params_with(HermiteArgument::Resolvent).unwrap();
        let b = s.to_q_params_with(HermiteArgument::ThroughY).unwrap();
        assert!(max_abs_vec(&(a.ry - b.ry)) < 1e-12);
    }

    #[test]
    fn mean_photon_examples() {
        assert_eq!(GaussianState::vacuum(1).mean_photon(0).unwrap(), 0.0);
        let c = GaussianState::coherent(DVector::from_vec(vec![0.0, SQRT_2])).unwrap();
        assert!((c.mean_photon(0).unwrap() - 1.0).abs() < 1e-15);
        let t = GaussianState::thermal(2, 0.8).unwrap();
        assert!((t.mean_photon(1).unwrap() - 0.8).abs() < 1e-15);
        assert_eq!(t.mean_photon(2).unwrap_err().name(), "IndexOutOfRange");
    }

    #[test]
    fn from_q_params_inverts() {
        let v = from_q_params(&GaussianState::vacuum(1).to_q_params().unwrap()).unwrap();
        assert!(max_abs(&(v.dispersion() - DMatrix::identity(2, 2) * 0.5)) < 1e-15);
        let t = GaussianState::thermal(1, 2.0).unwrap();
        let back = from_q_params(&t.to_q_params().unwrap()).unwrap();
        assert!(max_abs(&(back.dispersion() - DMatrix::identity(2, 2) * 2.5)) < 1e-13);
    }

    #[test]
    fn record_roundtrip() {
        let m = DMatrix::from_row_slice(4, 4, &[
            1.0, 0.1, 0.0, 0.2,
            0.1, 0.9, 0.05, 0.0,
            0.0, 0.05, 1.2, 0.1,
            0.2, 0.0, 0.1, 0.8,
        ]);
        let s = GaussianState::new(DVector::from_vec(vec![0.1, 0.2, 0.3, 0.4]), m).unwrap();
        let rec = s.to_record();
        assert_eq!(rec.dispersion_upper.len(), 10);
        let json = serde_json::to_string(&rec).unwrap();
        let back = GaussianState::from_record(&serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back, s);
    }
}
