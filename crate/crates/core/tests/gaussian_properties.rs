mod common;

use phasespace_core::gaussian::UNCERTAINTY_TOL;
use phasespace_core::grid::{linspace, trapezoid_weights};
use phasespace_core::{from_q_params, Complex64 as C64, DVector, GaussianState};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{SQRT_2, TAU};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pullback_identity(seed in any::<u64>(), n in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = common::random_state(&mut rng, n, 2.0, 1.0);
        let prop = common::random_propagator(&mut rng, n);
        let evolved = s.evolve(&prop).unwrap();
        for _ in 0..5 {
            let q = DVector::from_fn(2 * n, |_, _| rng.random_range(-1.5..1.5));
            let lhs = evolved.wigner(&q).unwrap();
            let rhs = s.wigner(&prop.apply(&q)).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-10, "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn constructed_states_respect_uncertainty(seed in any::<u64>(), n in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = common::random_state(&mut rng, n, 3.0, 2.0);
        prop_assert!(s.uncertainty_margin() >= -UNCERTAINTY_TOL);
        prop_assert!(s.purity() > 0.0 && s.purity() <= 1.0 + 1e-12);
        let evolved = s.evolve(&common::random_propagator(&mut rng, n)).unwrap();
        prop_assert!(evolved.uncertainty_margin() >= -UNCERTAINTY_TOL);
    }

    #[test]
    fn q_parameter_roundtrip(seed in any::<u64>(), n in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = common::random_state(&mut rng, n, 2.5, 2.0);
        let params = s.to_q_params().unwrap();
        let back = from_q_params(&params).unwrap();
        prop_assert!(common::max_abs_diff(back.dispersion(), s.dispersion()) <= 1e-9);
        prop_assert!((back.mean() - s.mean()).amax() <= 1e-9);
        let again = back.to_q_params().unwrap();
        prop_assert!((again.r_matrix - &params.r_matrix).camax() <= 1e-9);
        prop_assert!((again.ry - &params.ry).camax() <= 1e-9);
        prop_assert!((again.p0 - params.p0).abs() <= 1e-9);
    }

    #[test]
    fn q_function_peaks_at_the_mean(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = common::random_single_mode(&mut rng, 0.5, 3.0, 2.0);
        let params = s.to_q_params().unwrap();
        // the maximum sits where ∂ log Q = 0, found here by finite differences
        let log_q = |b: C64| params.q_function(&[b]).unwrap().ln();
        let (mut best, mut best_v) = (C64::new(0.0, 0.0), f64::NEG_INFINITY);
        for i in -60..=60 {
            for j in -60..=60 {
                let b = C64::new(i as f64 * 0.05, j as f64 * 0.05);
                let v = log_q(b);
                if v > best_v {
                    best = b;
                    best_v = v;
                }
            }
        }
        let expected = C64::new(s.mean()[1], s.mean()[0]) / SQRT_2;
        prop_assert!((best - expected).norm() <= 0.05, "{best} vs {expected}");
    }
}

#[test]
fn wigner_and_q_normalization() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..5 {
        let s = common::random_single_mode(&mut rng, 0.5, 3.0, 1.5);
        let eval = s.wigner_evaluator().unwrap();
        let sp = s.dispersion()[(0, 0)].sqrt();
        let sq = s.dispersion()[(1, 1)].sqrt();
        let ps = linspace(s.mean()[0] - 8.0 * sp, s.mean()[0] + 8.0 * sp, 201);
        let qs = linspace(s.mean()[1] - 8.0 * sq, s.mean()[1] + 8.0 * sq, 201);
        let wp = trapezoid_weights(201, ps[1] - ps[0]);
        let wq = trapezoid_weights(201, qs[1] - qs[0]);
        let mut total = 0.0;
        for (i, p) in ps.iter().enumerate() {
            for (j, q) in qs.iter().enumerate() {
                total += wp[i] * wq[j] * eval.eval_slice(&[*p, *q]).unwrap();
            }
        }
        assert!((total / TAU - 1.0).abs() <= 1e-4, "wigner mass {}", total / TAU);

        // Q is W smoothed by the vacuum, so its widths are √(σ² + ½)
        let params = s.to_q_params().unwrap();
        let c = C64::new(s.mean()[1], s.mean()[0]) / SQRT_2;
        let hr = 8.0 * ((s.dispersion()[(1, 1)] + 0.5) / 2.0).sqrt();
        let hi = 8.0 * ((s.dispersion()[(0, 0)] + 0.5) / 2.0).sqrt();
        let xs = linspace(c.re - hr, c.re + hr, 201);
        let ys = linspace(c.im - hi, c.im + hi, 201);
        let wx = trapezoid_weights(201, xs[1] - xs[0]);
        let wy = trapezoid_weights(201, ys[1] - ys[0]);
        let mut total = 0.0;
        for (i, x) in xs.iter().enumerate() {
            for (j, y) in ys.iter().enumerate() {
                total += wx[i] * wy[j] * params.q_function(&[C64::new(*x, *y)]).unwrap();
            }
        }
        let mass = total / std::f64::consts::PI;
        assert!((mass - 1.0).abs() <= 1e-4, "Q mass {mass}");
    }
}

#[test]
fn q_function_is_vacuum_smoothed_wigner() {
    // Q(β) = ∫ W_ρ W_β dp dq / 2π with W_β the coherent-state Wigner function
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let s = common::random_single_mode(&mut rng, 0.6, 2.5, 1.0);
    let eval = s.wigner_evaluator().unwrap();
    let grid = linspace(-12.0, 12.0, 481);
    let w = trapezoid_weights(481, grid[1] - grid[0]);
    for _ in 0..20 {
        let beta = C64::new(rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5));
        let (qb, pb) = (SQRT_2 * beta.re, SQRT_2 * beta.im);
        let mut total = 0.0;
        for (i, p) in grid.iter().enumerate() {
            for (j, q) in grid.iter().enumerate() {
                let vac = 2.0 * (-((p - pb).powi(2) + (q - qb).powi(2))).exp();
                total += w[i] * w[j] * eval.eval_slice(&[*p, *q]).unwrap() * vac;
            }
        }
        let smoothed = total / TAU;
        let direct = s.q_function(&[beta]).unwrap();
        assert!((smoothed - direct).abs() <= 1e-6, "β = {beta}: {smoothed} vs {direct}");
    }
}

#[test]
fn vacuum_q_function_is_exponential() {
    let v = GaussianState::vacuum(1);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let beta = C64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        assert!((v.q_function(&[beta]).unwrap() - (-beta.norm_sqr()).exp()).abs() <= 1e-10);
    }
}

#[test]
fn zero_mean_state_has_zero_y() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let s = common::random_state(&mut rng, 2, 2.0, 1.0);
    let centred = GaussianState::new(DVector::zeros(4), s.dispersion().clone()).unwrap();
    let p = centred.to_q_params().unwrap();
    assert_eq!(p.y.unwrap().camax(), 0.0);
    assert_eq!(p.ry.camax(), 0.0);
    assert!((centred.q_function(&[C64::new(0.0, 0.0), C64::new(0.0, 0.0)]).unwrap() - p.p0).abs() < 1e-15);
}
