//! Projected blocks against the full Hilbert space, and the complex-symmetric
//! eigensolver on large random inputs.

use cqed_core::basis::build_basis;
use cqed_core::eigen::diag_complex_symmetric;
use cqed_core::matrix::CMatrix;
use cqed_core::model::project_operators;
use cqed_core::{Emitter, SystemParams, UnitTag, C64};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const N_MAX: usize = 2;

/// Dense `H_eff` on Fock(0..=2) ⊗ (two-level)^N, index `n·2^N + mask`.
fn full_heff(p: &SystemParams) -> CMatrix<f64> {
    let n = p.n_emitters();
    let dim = (N_MAX + 1) << n;
    let idx = |ph: usize, mask: usize| (ph << n) | mask;
    let mut h = CMatrix::zeros(dim, dim);
    for ph in 0..=N_MAX {
        for mask in 0..1usize << n {
            let mut d = p.lambda_c() * ph as f64;
            for (k, e) in p.emitters.iter().enumerate() {
                if mask >> k & 1 == 1 {
                    d += C64::new(e.omega, -e.gamma / 2.0);
                }
                // a† σ_k: emitter k decays, one photon added.
                if mask >> k & 1 == 1 && ph < N_MAX {
                    let v = C64::new(e.g * ((ph + 1) as f64).sqrt(), 0.0);
                    h[(idx(ph + 1, mask & !(1 << k)), idx(ph, mask))] += v;
                    h[(idx(ph, mask), idx(ph + 1, mask & !(1 << k)))] += v;
                }
            }
            h[(idx(ph, mask), idx(ph, mask))] = d;
        }
    }
    h
}

fn full_index(n: usize, photons: usize, excited: &[usize]) -> usize {
    (photons << n) | excited.iter().fold(0, |m, &k| m | 1 << k)
}

fn random_params(rng: &mut ChaCha8Rng, n: usize) -> SystemParams {
    let em = (0..n)
        .map(|_| Emitter { omega: rng.random_range(-1.0..1.0), gamma: rng.random_range(0.0..0.1), g: rng.random_range(0.0..1.0) })
        .collect();
    let kb = rng.random_range(0.1..0.9);
    SystemParams::new(rng.random_range(-0.5..0.5), kb, 1.0 - kb, em, UnitTag::KappaUnits).unwrap()
}

#[test]
fn blocks_equal_full_space_projection() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in 0..=3 {
        for _ in 0..4 {
            let p = random_params(&mut rng, n);
            let full = full_heff(&p);
            let blocks = project_operators(&p).unwrap();
            for (m, h) in [(1, &blocks.h1), (2, &blocks.h2)] {
                let b = build_basis(m, n).unwrap();
                assert_eq!(h.rows(), b.dim());
                for (i, si) in b.states.iter().enumerate() {
                    for (j, sj) in b.states.iter().enumerate() {
                        let want = full[(full_index(n, si.photons, &si.excited), full_index(n, sj.photons, &sj.excited))];
                        assert!((h[(i, j)] - want).norm() < 1e-14, "N={n} m={m} ({i},{j})");
                    }
                }
                assert!(h.is_symmetric());
            }
            // Every full-space coupling out of the level-1 and level-2 states stays inside its level.
            let b1 = build_basis(1, n).unwrap();
            let b2 = build_basis(2, n).unwrap();
            let inside: Vec<usize> = b1.states.iter().chain(&b2.states).map(|s| full_index(n, s.photons, &s.excited)).collect();
            for &r in &inside {
                for c in 0..full.cols() {
                    if full[(r, c)].norm() > 0.0 {
                        assert!(inside.contains(&c));
                    }
                }
            }
        }
    }
}

#[test]
fn ladder_blocks_match_annihilation_operator() {
    let p = random_params(&mut ChaCha8Rng::seed_from_u64(3), 2);
    let blocks = project_operators(&p).unwrap();
    assert_eq!((blocks.a01.rows(), blocks.a01.cols()), (1, 3));
    assert_eq!(blocks.a01[(0, 0)], C64::new(1.0, 0.0));
    let b2 = build_basis(2, 2).unwrap();
    assert_eq!(b2.states[0].photons, 2);
    assert!((blocks.a12[(0, 0)] - C64::new(2f64.sqrt(), 0.0)).norm() < 1e-15);
}

fn random_symmetric(rng: &mut ChaCha8Rng, dim: usize) -> CMatrix<f64> {
    let mut h = CMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in i..dim {
            let z = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            h[(i, j)] = z;
            h[(j, i)] = z;
        }
    }
    h
}

#[test]
fn random_large_inputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for dim in [1, 7, 64, 300, 2000] {
        let h = random_symmetric(&mut rng, dim);
        let es = diag_complex_symmetric(&h, 2).unwrap();
        assert!(es.orthonormality_error() < 1e-10, "dim {dim}: {}", es.orthonormality_error());
        assert!(es.reconstruction_error(&h) < 1e-9, "dim {dim}: {}", es.reconstruction_error(&h));
    }
}

#[test]
fn permuting_the_basis_leaves_the_spectrum() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let h = random_symmetric(&mut rng, 40);
    let perm: Vec<usize> = (0..40).rev().map(|k| (k * 7) % 40).collect();
    let hp = CMatrix::from_fn(40, 40, |i, j| h[(perm[i], perm[j])]);
    let a = diag_complex_symmetric(&h, 2).unwrap();
    let b = diag_complex_symmetric(&hp, 2).unwrap();
    for (x, y) in a.lambdas.iter().zip(&b.lambdas) {
        assert!((x - y).norm() < 1e-11);
    }
}

#[test]
fn real_symmetric_matches_hermitian_solver() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let dim = 50;
    let mut h = CMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in i..dim {
            let x = rng.random_range(-1.0..1.0);
            h[(i, j)] = C64::new(x, 0.0);
            h[(j, i)] = C64::new(x, 0.0);
        }
    }
    let m = faer::Mat::<f64>::from_fn(dim, dim, |i, j| h[(i, j)].re);
    let mut want = m.self_adjoint_eigenvalues(faer::Side::Lower).unwrap();
    want.sort_by(f64::total_cmp);
    let got = diag_complex_symmetric(&h, 1).unwrap();
    for (z, w) in got.lambdas.iter().zip(&want) {
        assert!((z.re - w).abs() < 1e-12 && z.im.abs() < 1e-12);
    }
}

#[test]
fn subradiant_manifold_is_exact() {
    let p = SystemParams::identical(5, 0.0, 0.0, 1.0, 0.01, 0.3).unwrap();
    let es = diag_complex_symmetric(&project_operators(&p).unwrap().h1, 1).unwrap();
    let dark = es.lambdas.iter().filter(|l| (**l - C64::new(0.0, -0.005)).norm() < 1e-12).count();
    assert_eq!(dark, 4);
    assert!(es.orthonormality_error() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, .. ProptestConfig::default() })]

    #[test]
    fn random_systems_decompose(seed in any::<u64>(), n in 1usize..=6) {
        let p = random_params(&mut ChaCha8Rng::seed_from_u64(seed), n);
        let b = project_operators(&p).unwrap();
        for (m, h) in [(1, &b.h1), (2, &b.h2)] {
            let es = diag_complex_symmetric(h, m).unwrap();
            prop_assert!(es.orthonormality_error() < 1e-10);
            prop_assert!(es.reconstruction_error(h) < 1e-9);
        }
    }

    #[test]
    fn dimension_formula(n in 0usize..=64) {
        prop_assert_eq!(build_basis(1, n).unwrap().dim(), 1 + n);
        prop_assert_eq!(build_basis(2, n).unwrap().dim(), 1 + n + n * n.saturating_sub(1) / 2);
    }
}
