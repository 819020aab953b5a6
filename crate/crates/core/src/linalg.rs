//! Small dense linear-algebra helpers shared by the physics modules.
//!
//! Everything here works on `nalgebra` dynamic matrices and is generic over
//! real and complex scalars where both are needed.

use nalgebra::{ComplexField, DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Inversion refuses matrices whose 1-norm condition estimate exceeds this.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Taylor degree used inside [`expm`] after scaling.
const EXPM_TAYLOR_DEGREE: usize = 18;

/// Elementwise maximum modulus, `‖A‖∞` in the max-entry sense.
pub fn max_abs<T: ComplexField<RealField = f64>>(a: &DMatrix<T>) -> f64 {
    a.iter().map(|x| x.clone().modulus()).fold(0.0, f64::max)
}

pub fn max_abs_vec<T: ComplexField<RealField = f64>>(v: &DVector<T>) -> f64 {
    v.iter().map(|x| x.clone().modulus()).fold(0.0, f64::max)
}

/// Induced 1-norm (maximum absolute column sum).
pub fn norm1<T: ComplexField<RealField = f64>>(a: &DMatrix<T>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|x| x.clone().modulus()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `‖A − Aᵀ‖` in the max-entry sense.
pub fn asymmetry<T: ComplexField<RealField = f64>>(a: &DMatrix<T>) -> f64 {
    max_abs(&(a - a.transpose()))
}

/// LU inverse with partial pivoting; fails when the condition estimate is
/// above [`CONDITION_LIMIT`].
pub fn inverse_checked<T>(a: &DMatrix<T>, name: &str) -> Result<DMatrix<T>>
where
    T: ComplexField<RealField = f64>,
{
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "`{name}` is {}x{}, expected square",
            a.nrows(),
            a.ncols()
        )));
    }
    let singular = |condition| Error::SingularMatrix { name: name.to_string(), condition };
    let inv = a.clone().lu().try_inverse().ok_or_else(|| singular(f64::INFINITY))?;
    let condition = norm1(a) * norm1(&inv);
    if !condition.is_finite() || condition > CONDITION_LIMIT {
        return Err(singular(condition));
    }
    Ok(inv)
}

/// Matrix exponential by scaling and squaring with a truncated Taylor series.
///
/// The argument is scaled by `2^-s` until its 1-norm is at most 1/2, the
/// degree-18 Taylor polynomial is evaluated by Horner's rule, and the result
/// is squared `s` times.
pub fn expm<T>(a: &DMatrix<T>) -> DMatrix<T>
where
    T: ComplexField<RealField = f64>,
{
    assert!(a.is_square(), "expm needs a square matrix");
    let n = a.nrows();
    let norm = norm1(a);
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let scale = T::from_real(2f64.powi(-squarings));
    let scaled = a * scale;

    let identity = DMatrix::<T>::identity(n, n);
    let mut result = identity.clone();
    for k in (1..=EXPM_TAYLOR_DEGREE).rev() {
        let inv_k = T::from_real(1.0 / k as f64);
        result = &identity + (&scaled * result) * inv_k;
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Real symmetric eigenvalues of a Hermitian complex matrix, computed through
/// the real symmetric embedding `[[Re, -Im], [Im, Re]]` (each eigenvalue
/// appears twice).
pub fn hermitian_eigenvalues(h: &DMatrix<C64>) -> Vec<f64> {
    let n = h.nrows();
    let mut embed = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = h[(i, j)];
            embed[(i, j)] = z.re;
            embed[(i + n, j + n)] = z.re;
            embed[(i, j + n)] = -z.im;
            embed[(i + n, j)] = z.im;
        }
    }
    embed.symmetric_eigenvalues().iter().copied().collect()
}

pub fn to_complex(a: &DMatrix<f64>) -> DMatrix<C64> {
    a.map(|x| C64::new(x, 0.0))
}

pub fn to_complex_vec(v: &DVector<f64>) -> DVector<C64> {
    v.map(|x| C64::new(x, 0.0))
}

/// Classical fixed-step RK4 for the linear matrix ODE `Ẋ = X[:, ..k] · G(t)`
/// where `X` is `k × m` and `G(t)` is `k × m`.
///
/// Both the propagator equations of the quadratic dynamics take this form:
/// the first `k` columns of the state hold the propagator matrix and the
/// remaining columns hold the affine part.
pub(crate) fn rk4_left_linear<T, G>(
    mut state: DMatrix<T>,
    t_start: f64,
    t_end: f64,
    n_steps: usize,
    mut generator: G,
) -> Result<DMatrix<T>>
where
    T: ComplexField<RealField = f64>,
    G: FnMut(f64) -> Result<DMatrix<T>>,
{
    let k = state.nrows();
    let h = (t_end - t_start) / n_steps as f64;
    let half = T::from_real(0.5 * h);
    let full = T::from_real(h);
    let sixth = T::from_real(h / 6.0);
    let two = T::from_real(2.0);

    let rhs = |x: &DMatrix<T>, g: &DMatrix<T>| x.columns(0, k) * g;

    for step in 0..n_steps {
        let t = t_start + h * step as f64;
        let g0 = generator(t)?;
        let g_mid = generator(t + 0.5 * h)?;
        let g1 = generator(t + h)?;

        let k1 = rhs(&state, &g0);
        let k2 = rhs(&(&state + &k1 * half.clone()), &g_mid);
        let k3 = rhs(&(&state + &k2 * half.clone()), &g_mid);
        let k4 = rhs(&(&state + &k3 * full.clone()), &g1);
        state += (k1 + (k2 + k3) * two.clone() + k4) * sixth.clone();
    }
    Ok(state)
}

pub(crate) fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(Error::DimensionMismatch("ragged matrix rows".into()));
    }
    Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

pub(crate) fn matrix_to_rows(a: &DMatrix<f64>) -> Vec<Vec<f64>> {
    a.row_iter().map(|r| r.iter().copied().collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expm_of_rotation_generator() {
        let t = 0.7_f64;
        let a = DMatrix::from_row_slice(2, 2, &[0.0, t, -t, 0.0]);
        let e = expm(&a);
        let expected = DMatrix::from_row_slice(2, 2, &[t.cos(), t.sin(), -t.sin(), t.cos()]);
        assert!(max_abs(&(e - expected)) < 1e-15);
    }

    #[test]
    fn expm_large_norm_matches_diagonal() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, -5.0, 0.25]));
        let e = expm(&a);
        for (i, d) in [3.0_f64, -5.0, 0.25].iter().enumerate() {
            assert!((e[(i, i)] - d.exp()).abs() <= 1e-13 * d.exp());
        }
    }

    #[test]
    fn expm_complex_phase() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![C64::new(0.0, 2.0), C64::new(0.0, -2.0)]));
        let e = expm(&a);
        assert!((e[(0, 0)] - C64::new(0.0, 2.0).exp()).norm() < 1e-14);
        assert!((e[(1, 1)] - C64::new(0.0, -2.0).exp()).norm() < 1e-14);
    }

    #[test]
    fn singular_inverse_is_rejected() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        let err = inverse_checked(&a, "test").unwrap_err();
        assert_eq!(err.name(), "SingularMatrix");
        let nearly = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0 + 1e-14]);
        assert!(inverse_checked(&nearly, "nearly").is_err());
    }

    #[test]
    fn hermitian_spectrum_of_pauli_y() {
        let y = DMatrix::from_row_slice(2, 2, &[C64::new(0.0, 0.0), C64::new(0.0, -1.0), C64::new(0.0, 1.0), C64::new(0.0, 0.0)]);
        let mut ev = hermitian_eigenvalues(&y);
        ev.sort_by(f64::total_cmp);
        assert!((ev[0] + 1.0).abs() < 1e-14 && (ev[3] - 1.0).abs() < 1e-14);
    }
}
