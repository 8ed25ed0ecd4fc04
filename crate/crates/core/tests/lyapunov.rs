use std::f64::consts::PI;

use nalgebra::DMatrix;
use proptest::prelude::*;
use pxp_scars::lyapunov::*;
use pxp_scars::semiclassics::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn orbit_frequency() -> f64 {
    let p = ModelParams::new(1.0, 2).unwrap();
    let traj = integrate(&UnitCellState::z2(2), &p, 20.0, 1e-3).unwrap();
    find_orbit_period(&traj, 2.0 * PI).unwrap().frequency
}

fn sorted_moduli(m: &MonodromyMatrix) -> Vec<f64> {
    let mut v: Vec<f64> = complex_eigenvalues(&m.entries).unwrap().iter().map(|z| z.norm()).collect();
    v.sort_by(f64::total_cmp);
    v
}

fn params(l: usize) -> ModelParams {
    ModelParams::new(1.0, l).unwrap()
}

#[test]
fn analytic_jacobian_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for l in [2usize, 4, 6] {
        for _ in 0..20 {
            let th: Vec<f64> = (0..l).map(|_| rng.random_range(0.1..1.4)).collect();
            let a = eom_jacobian(&th, &params(l), JacobianMode::Analytic).unwrap();
            let f = eom_jacobian(&th, &params(l), JacobianMode::FiniteDifference).unwrap();
            assert!((a - f).abs().max() < 1e-5);
        }
    }
}

/// The Z₂ point itself is a chart pole, so both routes refuse it alike;
/// away from it they agree entry by entry.
#[test]
fn orbit_jacobian_is_composition_with_harmonic() {
    let w = orbit_frequency();
    let at_origin = z2_orbit_jacobian(0.0, &params(2), w);
    let direct = eom_jacobian(&[0.0, PI / 2.0], &params(2), JacobianMode::Analytic);
    assert_eq!(at_origin.map(|_| ()), direct.map(|_| ()));
    for t in [1e-3, 0.5, 2.0] {
        let (t1, t2) = first_harmonic_orbit(t, w);
        let a = z2_orbit_jacobian(t, &params(2), w).unwrap();
        let b = eom_jacobian(&[t1, t2], &params(2), JacobianMode::Analytic).unwrap();
        assert!((a - b).abs().max() < 1e-12);
    }
}

/// A 2-periodic tangent vector stays 2-periodic: the L=8 Jacobian acting on
/// a tiled vector is the tiled L=2 result.
#[test]
fn larger_cell_contains_two_site_block() {
    let w = orbit_frequency();
    for t in [0.4, 3.3, 7.9] {
        let j2 = z2_orbit_jacobian(t, &params(2), w).unwrap();
        let j8 = z2_orbit_jacobian(t, &params(8), w).unwrap();
        let v = [0.3, -1.7];
        let tiled = DMatrix::from_fn(8, 1, |i, _| v[i % 2]);
        let small = &j2 * DMatrix::from_column_slice(2, 1, &v);
        let big = &j8 * tiled;
        for i in 0..8 {
            assert!((big[(i, 0)] - small[(i % 2, 0)]).abs() < 1e-12);
        }
    }
}

/// θ₁(t+τ/4) = θ₂(t) − π: a quarter period shifts the indices by one and
/// flips the sign of every odd-distance coupling.
#[test]
fn quarter_period_shift_symmetry() {
    let w = orbit_frequency();
    let tau = 2.0 * PI / w;
    for l in [2usize, 4, 8] {
        for k in 0..40 {
            let t = 0.013 + k as f64 * tau / 40.0;
            let a = match z2_orbit_jacobian(t, &params(l), w) {
                Ok(a) => a,
                Err(_) => continue,
            };
            let b = z2_orbit_jacobian(t + tau / 4.0, &params(l), w).unwrap();
            for i in 0..l {
                for j in 0..l {
                    let s = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                    let lhs = b[((i + 1) % l, (j + 1) % l)];
                    assert!((lhs - s * a[(i, j)]).abs() < 1e-9 * (1.0 + a[(i, j)].abs()), "L={l} t={t}");
                }
            }
        }
    }
}

#[test]
fn direct_and_symmetric_agree_for_two_sites() {
    let w = orbit_frequency();
    let dt = eighth_period_dt(w, 2000);
    let d = sorted_moduli(&monodromy_direct(&params(2), w, dt, Drive::Harmonic).unwrap());
    let s = sorted_moduli(&monodromy_symmetric(&params(2), w, dt).unwrap());
    for (a, b) in d.iter().zip(&s) {
        assert!((a - b).abs() / b < 1e-6);
    }
}

/// Midpoint sampling converges at second order; at 1e5 steps per eighth
/// a further halving moves the eigenvalues by a few 1e−9.
#[test]
fn symmetric_monodromy_refinement() {
    let w = orbit_frequency();
    let a = sorted_moduli(&monodromy_symmetric(&params(2), w, eighth_period_dt(w, 100_000)).unwrap());
    let b = sorted_moduli(&monodromy_symmetric(&params(2), w, eighth_period_dt(w, 200_000)).unwrap());
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 1e-8, "{x} vs {y}");
    }
}

#[test]
fn exponents_stable_under_step_halving() {
    let w = orbit_frequency();
    for l in [2usize, 8, 30] {
        let a = lyapunov_spectrum(&monodromy_symmetric(&params(l), w, eighth_period_dt(w, 2000)).unwrap()).unwrap();
        let b = lyapunov_spectrum(&monodromy_symmetric(&params(l), w, eighth_period_dt(w, 4000)).unwrap()).unwrap();
        for (x, y) in a.exponents.iter().zip(&b.exponents) {
            assert!((x - y).abs() < 1e-6, "L={l}: {x} vs {y}");
        }
    }
}

#[test]
fn spectra_pair_and_stay_small() {
    let w = orbit_frequency();
    let mut best = (0usize, f64::MIN);
    for l in (2..=12).step_by(2) {
        let s = lyapunov_spectrum(&monodromy_symmetric(&params(l), w, eighth_period_dt(w, 2000)).unwrap()).unwrap();
        assert!(s.pairing_residual() < 1e-4 * l as f64);
        assert!(s.exponents.iter().all(|x| x.abs() < 0.1));
        // Each exponent has a partner of opposite sign.
        let k = s.exponents.len();
        for i in 0..k {
            assert!((s.exponents[i] + s.exponents[k - 1 - i]).abs() < 1e-6, "L={l}");
        }
        if s.max() > best.1 + 1e-9 {
            best = (l, s.max());
        }
    }
    assert_eq!(best.0, 2, "largest exponent should sit in the Z2-invariant sector");
}

#[test]
fn direct_method_rejects_coarse_steps() {
    let w = orbit_frequency();
    let tau = 2.0 * PI / w;
    assert!(monodromy_direct(&params(2), w, tau / 500.0, Drive::Harmonic).is_err());
}

/// The exact integrated orbit of the two-site flow is a periodic orbit of
/// a 2D autonomous Hamiltonian system, so both multipliers are 1. Benettin
/// runs along it agree with that, not with the harmonic-drive exponent:
/// their residual is an eps-proportional drift far below it.
#[test]
fn brute_force_agrees_with_exact_orbit_monodromy() {
    let w = orbit_frequency();
    let tau = 2.0 * PI / w;
    let exact = lyapunov_spectrum(&monodromy_direct(&params(2), w, eighth_period_dt(w, 2000), Drive::Integrated).unwrap()).unwrap();
    assert!(exact.max().abs() < 1e-5, "{exact:?}");
    let harmonic = lyapunov_spectrum(&monodromy_symmetric(&params(2), w, eighth_period_dt(w, 2000)).unwrap()).unwrap().max();
    for eps in [1e-9, 1e-8] {
        let bf = brute_force_max_exponent(&UnitCellState::z2(2), &params(2), w, eps, 10.0 * tau, 2000, 7).unwrap();
        assert!(bf.abs() < 0.1 * harmonic, "eps={eps}: {bf} vs {harmonic}");
    }
}

proptest! {
    #[test]
    fn jacobian_is_two_periodic_on_z2_points(t1 in 0.1f64..1.4, t2 in 0.1f64..1.4) {
        let l = 8;
        let th = UnitCellState::z2_tiled(l, t1, t2).thetas;
        let f = eom_jacobian(&th, &params(l), JacobianMode::Analytic).unwrap();
        for i in 0..l {
            for j in 0..l {
                prop_assert!((f[((i + 2) % l, (j + 2) % l)] - f[(i, j)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn jacobian_swap_symmetry(t1 in 0.1f64..1.4, t2 in 0.1f64..1.4) {
        let l = 4;
        let a = eom_jacobian(&UnitCellState::z2_tiled(l, t1, t2).thetas, &params(l), JacobianMode::Analytic).unwrap();
        let b = eom_jacobian(&UnitCellState::z2_tiled(l, t2, t1).thetas, &params(l), JacobianMode::Analytic).unwrap();
        for i in 0..l {
            for j in 0..l {
                prop_assert!((b[((i + 1) % l, (j + 1) % l)] - a[(i, j)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gradient_check_random_cells(seed in any::<u64>(), half in 1usize..5) {
        let l = 2 * half;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let th: Vec<f64> = (0..l).map(|_| rng.random_range(0.1..1.45)).collect();
        let a = eom_jacobian(&th, &params(l), JacobianMode::Analytic).unwrap();
        let f = eom_jacobian(&th, &params(l), JacobianMode::FiniteDifference).unwrap();
        prop_assert!((a - f).abs().max() < 1e-5);
    }
}
