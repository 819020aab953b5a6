#![allow(dead_code)]

use phasespace_core::{DMatrix, DVector, GaussianState, PropagatorReal};
use rand::Rng;

/// Symmetric matrix with orthogonally random eigenvectors and eigenvalues in `[lo, hi)`.
pub fn random_symmetric<R: Rng>(rng: &mut R, dim: usize, lo: f64, hi: f64) -> DMatrix<f64> {
    let a = DMatrix::from_fn(dim, dim, |_, _| rng.random_range(-1.0..1.0));
    let q = a.qr().q();
    let d = DMatrix::from_diagonal(&DVector::from_fn(dim, |_, _| rng.random_range(lo..hi)));
    let b = &q * d * q.transpose();
    (&b + b.transpose()) * 0.5
}

/// Product of upper and lower symplectic shears and a local squeeze.
pub fn random_symplectic<R: Rng>(rng: &mut R, n: usize, scale: f64) -> DMatrix<f64> {
    let dim = 2 * n;
    let mut s = DMatrix::<f64>::identity(dim, dim);
    for k in 0..3 {
        let sym = random_symmetric(rng, n, -scale, scale);
        let mut shear = DMatrix::<f64>::identity(dim, dim);
        if k % 2 == 0 {
            shear.view_mut((n, 0), (n, n)).copy_from(&sym);
        } else {
            shear.view_mut((0, n), (n, n)).copy_from(&sym);
        }
        s = shear * s;
    }
    let mut squeeze = DMatrix::<f64>::identity(dim, dim);
    for j in 0..n {
        let r: f64 = rng.random_range(-scale..scale);
        squeeze[(j, j)] = r.exp();
        squeeze[(n + j, n + j)] = (-r).exp();
    }
    squeeze * s
}

pub fn random_propagator<R: Rng>(rng: &mut R, n: usize) -> PropagatorReal {
    let lambda = random_symplectic(rng, n, 0.5);
    let delta = DVector::from_fn(2 * n, |_, _| rng.random_range(-1.0..1.0));
    PropagatorReal::new(lambda, delta, 0.0).expect("symplectic by construction")
}

/// Williamson form `S diag(ν, ν) Sᵀ` with symplectic eigenvalues in `[½, nu_max)`.
pub fn random_state<R: Rng>(rng: &mut R, n: usize, nu_max: f64, mean_bound: f64) -> GaussianState {
    let s = random_symplectic(rng, n, 0.4);
    let nu: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..nu_max)).collect();
    let d = DMatrix::from_diagonal(&DVector::from_fn(2 * n, |k, _| nu[k % n]));
    let m = &s * d * s.transpose();
    let mean = DVector::from_fn(2 * n, |_, _| rng.random_range(-mean_bound..mean_bound));
    GaussianState::new(mean, (&m + m.transpose()) * 0.5).expect("physical by construction")
}

/// Single-mode state with dispersion eigenvalues in `[lo, hi)` that still
/// satisfies the uncertainty bound, and `|⟨Q⟩| ≤ mean_bound`.
pub fn random_single_mode<R: Rng>(rng: &mut R, lo: f64, hi: f64, mean_bound: f64) -> GaussianState {
    loop {
        let m = random_symmetric(rng, 2, lo, hi);
        let r = rng.random_range(0.0..mean_bound);
        let phi = rng.random_range(0.0..std::f64::consts::TAU);
        let mean = DVector::from_vec(vec![r * phi.sin(), r * phi.cos()]);
        if let Ok(s) = GaussianState::new(mean, m) {
            return s;
        }
    }
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).iter().fold(0.0, |m, x| m.max(x.abs()))
}
