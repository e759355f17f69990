//! Observables: closed-form cases, cross-route consistency and delayed
//! correlation structure.

use cqed_core::scattering::{linspace, Scatterer as GenericScatterer};
use cqed_core::{Emitter, IdenticalParams, Scatterer, SystemParams, UnitTag};
use proptest::prelude::*;

fn detuned(n: usize) -> SystemParams {
    IdenticalParams::new(n, 0.0, 0.8, 1.0, 0.01, 0.2).to_system().unwrap()
}

#[test]
fn bare_cavity() {
    let p = SystemParams::new(0.0, 0.5, 0.5, vec![], UnitTag::KappaUnits).unwrap();
    let s = Scatterer::new(p);
    assert!((s.transmission(0.0).unwrap() - 1.0).abs() < 1e-14);
    for w in linspace(-3.0, 3.0, 13) {
        assert!((s.g2_zero(w).unwrap().0 - 1.0).abs() < 1e-12);
    }
    let a = s.anharmonicity().unwrap();
    assert!(a.delta_omega_12.abs() < 1e-14);
}

#[test]
fn decoupled_emitters_are_harmonic() {
    let p = SystemParams::new(
        0.0,
        0.5,
        0.5,
        vec![Emitter { omega: 0.3, gamma: 0.01, g: 0.0 }, Emitter { omega: -0.2, gamma: 0.02, g: 0.0 }],
        UnitTag::KappaUnits,
    )
    .unwrap();
    let s = Scatterer::new(p);
    assert!(s.anharmonicity().unwrap().delta_omega_12 < 1e-14);
    assert!((s.g2_zero(0.4).unwrap().0 - 1.0).abs() < 1e-12);
}

#[test]
fn fano_dip_at_the_emitter() {
    let s = Scatterer::new(detuned(1));
    assert!(s.transmission(0.8).unwrap() < 1e-2);
}

#[test]
fn resonant_lossless_anharmonicity() {
    // Large g makes the losses negligible: (2 − √2)g.
    let g = 1e4;
    let p = SystemParams::identical(1, 0.0, 0.0, 1.0, 1e-6, g).unwrap();
    let d = Scatterer::new(p).anharmonicity().unwrap().delta_omega_12;
    assert!((d / g - (2.0 - 2f64.sqrt())).abs() < 1e-6, "{}", d / g);
}

#[test]
fn strong_coupling_ladder_evens_out_with_n() {
    let d: Vec<f64> = [1usize, 2, 4, 8, 16, 32]
        .iter()
        .map(|&n| Scatterer::auto(SystemParams::identical(n, 0.0, 0.0, 1.0, 0.01, 2.0).unwrap()).anharmonicity().unwrap().delta_omega_12)
        .collect();
    assert!(d.windows(2).all(|w| w[1] < w[0]), "{d:?}");
}

#[test]
fn detuned_blockade_deepens_with_n() {
    let mins: Vec<f64> = [1usize, 2, 4, 8, 16]
        .iter()
        .map(|&n| {
            let s = Scatterer::auto(detuned(n));
            linspace(0.3, 0.79, 4901).iter().map(|&w| s.g2_zero(w).unwrap().0).fold(f64::INFINITY, f64::min)
        })
        .collect();
    assert!(mins.windows(2).all(|w| w[1] < w[0]), "{mins:?}");
}

#[test]
fn dicke_route_matches_full_route() {
    let p = SystemParams::identical(6, 0.1, 0.7, 1.0, 0.02, 0.3).unwrap();
    let (fast, full) = (Scatterer::auto(p.clone()), Scatterer::new(p));
    for w in linspace(-1.5, 2.0, 71) {
        let (a, b) = (fast.transmission(w).unwrap(), full.transmission(w).unwrap());
        assert!((a - b).abs() <= 1e-10 * b.max(1e-6));
        let (a, b) = (fast.g2_zero(w).unwrap().0, full.g2_zero(w).unwrap().0);
        assert!((a - b).abs() <= 1e-8 * b, "{w}: {a} vs {b}");
    }
}

#[test]
fn single_precision_tracks_double() {
    let p = SystemParams::new(
        0.0,
        0.5,
        0.5,
        vec![Emitter { omega: 0.4, gamma: 0.05, g: 0.3 }, Emitter { omega: 0.6, gamma: 0.05, g: 0.25 }],
        UnitTag::KappaUnits,
    )
    .unwrap();
    let em32 = p.emitters.iter().map(|e| cqed_core::model::Emitter { omega: e.omega as f32, gamma: e.gamma as f32, g: e.g as f32 }).collect();
    let p32 = cqed_core::model::SystemParams::<f32>::new(0.0, 0.5, 0.5, em32, UnitTag::KappaUnits).unwrap();
    let (s64, s32) = (Scatterer::new(p), GenericScatterer::new(p32));
    for w in [-0.8, 0.0, 0.3, 1.1] {
        let t = s64.transmission(w).unwrap();
        assert!((s32.transmission(w as f32).unwrap() as f64 - t).abs() < 1e-4 * t.max(1e-3));
        let g = s64.g2_zero(w).unwrap().0;
        assert!((s32.g2_zero(w as f32).unwrap().0 as f64 - g).abs() < 1e-3 * g);
    }
}

#[test]
fn delayed_correlation_oscillates_at_polariton_splitting() {
    // One emitter on resonance, driven at the upper polariton: the only
    // beat is the polariton splitting.
    let p = SystemParams::identical(1, 0.0, 0.0, 1.0, 0.01, 2.0).unwrap();
    let s = Scatterer::new(p);
    let l = s.eigensystem1().unwrap().lambdas.clone();
    let w = l[1].re;
    let split = l[1].re - l[0].re;
    let (len, n) = (40.0, 4000);
    let taus: Vec<f64> = (0..n).map(|k| len * k as f64 / n as f64).collect();
    let tr = s.g2_tau(w, &taus).unwrap();
    let dt = len / n as f64;
    let power = |f: f64| {
        let (mut re, mut im) = (0.0, 0.0);
        for (k, v) in tr.g2.iter().enumerate() {
            let ph = f * k as f64 * dt;
            re += (v - 1.0) * ph.cos();
            im += (v - 1.0) * ph.sin();
        }
        re * re + im * im
    };
    let step = 2.0 * std::f64::consts::PI / len;
    // Strongest local maximum; the non-oscillating decay only adds a
    // monotone lobe around zero frequency.
    let pw: Vec<f64> = (0..200).map(|k| power(k as f64 * step)).collect();
    let k = (1..199).filter(|&k| pw[k] > pw[k - 1] && pw[k] >= pw[k + 1]).max_by(|a, b| pw[*a].total_cmp(&pw[*b])).unwrap();
    let peak = k as f64 * step;
    assert!((peak - split).abs() <= step, "peak {peak} vs splitting {split}");
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, .. ProptestConfig::default() })]

    #[test]
    fn observables_are_consistent(
        ems in prop::collection::vec((-1.0f64..1.0, 0.002f64..0.1, 0.0f64..1.0), 0..=5),
        kb in 0.1f64..0.9,
        w in -2.0f64..2.0,
    ) {
        let em: Vec<Emitter> = ems.iter().map(|&(omega, gamma, g)| Emitter { omega, gamma, g }).collect();
        let p = SystemParams::new(0.0, kb, 1.0 - kb, em, UnitTag::KappaUnits).unwrap();
        let s = Scatterer::new(p);
        let t = s.transmission(w).unwrap();
        prop_assert!(t.is_finite() && t >= 0.0);
        prop_assume!(t > 1e-10);
        let (g2, parts) = s.g2_zero(w).unwrap();
        prop_assert!(g2.is_finite() && g2 >= 0.0);
        let sum: cqed_core::C64 = parts.iter().map(|d| d.gamma).sum();
        prop_assert!((sum.norm_sqr() - g2).abs() <= 1e-9 * g2.max(1e-12));
        let k = s.g2_zero_kernel(w).unwrap();
        prop_assert!((k - g2).abs() <= 1e-9 * g2.max(1e-12));

        // τ = 0 reproduces g²(0); the tail settles to 1 inside an envelope
        // fixed by the slowest single-excitation decay.
        let c = s.g2_components(w).unwrap();
        let slow = c.lambdas1.iter().map(|l| -l.im).fold(f64::INFINITY, f64::min);
        let far = 50.0 / slow;
        let taus = linspace(0.0, far, 201);
        let tr = s.g2_tau(w, &taus).unwrap();
        prop_assert!((tr.g2[0] - g2).abs() <= 1e-10 * g2.max(1e-12));
        prop_assert!((tr.g2[200] - 1.0).abs() < 1e-6);
        let a = c.amplitude.norm_sqr();
        let m: f64 = c.connected_weights.iter().zip(&c.disconnected_weights).map(|(f, g)| (f - g).norm()).sum();
        for (tau, v) in taus.iter().zip(&tr.g2) {
            let e = m * (-slow * tau).exp();
            prop_assert!((v - 1.0).abs() <= (2.0 * a * e + e * e) / (a * a) * (1.0 + 1e-9) + 1e-12);
        }
    }
}
