use std::sync::Arc;

use amplab::amplitude::Superposition;
use amplab::checks::{random_lattice, random_state};
use amplab::setup::{random_canonical, SetupRng};
use amplab::{
    amplitude_chain, amplitude_pathsum, build_hamiltonian, build_kernel, build_superposition, evolve, parse,
    Boundary, CanonicalSetup, Filter, LatticeConfig, SpacetimePoint, WaveState,
};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};

fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn hamiltonian_is_hermitian(seed in any::<u64>()) {
        let cfg = random_lattice(&mut SetupRng::seed_from_u64(seed), 12);
        let h = build_hamiltonian(&cfg);
        prop_assert_eq!(h.matrix().adjoint(), h.matrix().clone());
    }

    #[test]
    fn kernel_is_unitary(seed in any::<u64>(), dt in 0.001f64..3.0) {
        let cfg = random_lattice(&mut SetupRng::seed_from_u64(seed), 12);
        let k = build_kernel(&build_hamiltonian(&cfg), dt).unwrap();
        prop_assert!(k.unitarity_defect() <= 1e-12, "{}", k.unitarity_defect());
    }

    #[test]
    fn semigroup(seed in any::<u64>(), a in 0.01f64..1.0, b in 0.01f64..1.0) {
        let cfg = random_lattice(&mut SetupRng::seed_from_u64(seed), 10);
        let h = build_hamiltonian(&cfg);
        let ka = build_kernel(&h, a).unwrap();
        let kb = build_kernel(&h, b).unwrap();
        let kab = build_kernel(&h, a + b).unwrap();
        prop_assert!(max_abs(&(ka.matrix() * kb.matrix() - kab.matrix())) <= 1e-12);
    }

    #[test]
    fn small_dt_recovers_generator(seed in any::<u64>()) {
        let cfg = random_lattice(&mut SetupRng::seed_from_u64(seed), 8);
        let h = build_hamiltonian(&cfg);
        let scale = max_abs(h.matrix()).max(1.0);
        let m = cfg.num_sites();
        let dt = 1e-6;
        let k = build_kernel(&h, dt).unwrap();
        // i (K - 1) / dt = H + O(dt)
        let approx = (k.matrix() - DMatrix::<Complex64>::identity(m, m)) * Complex64::new(0.0, 1.0 / dt);
        let err = max_abs(&(approx - h.matrix()));
        prop_assert!(err <= 1e-4 * scale * scale, "{err}");
    }

    #[test]
    fn evolution_is_linear(seed in any::<u64>(), steps in 0u64..12) {
        let mut rng = SetupRng::seed_from_u64(seed);
        let cfg = random_lattice(&mut rng, 8);
        let k = build_kernel(&build_hamiltonian(&cfg), rng.random_range(0.05..1.0)).unwrap();
        let a = random_state(&mut rng, 0, cfg.weights().clone());
        let b = random_state(&mut rng, 0, cfg.weights().clone());
        let (alpha, beta) = (
            Complex64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)),
            Complex64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)),
        );
        let combo = a.scale(alpha).add(&b.scale(beta)).unwrap();
        let lhs = evolve(&combo, &k, steps, &[]).unwrap();
        let rhs = evolve(&a, &k, steps, &[]).unwrap().scale(alpha)
            .add(&evolve(&b, &k, steps, &[]).unwrap().scale(beta)).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-12);
    }

    #[test]
    fn filterless_evolution_preserves_norm(seed in any::<u64>(), steps in 0u64..30) {
        let mut rng = SetupRng::seed_from_u64(seed);
        let cfg = random_lattice(&mut rng, 10);
        let k = build_kernel(&build_hamiltonian(&cfg), rng.random_range(0.05..1.0)).unwrap();
        let a = random_state(&mut rng, 0, cfg.weights().clone());
        let out = evolve(&a, &k, steps, &[]).unwrap();
        prop_assert!((out.norm_sqr() - a.norm_sqr()).abs() <= 1e-12 * a.norm_sqr().max(1.0));
        prop_assert_eq!(out.time(), steps as i64);
    }

    #[test]
    fn filters_never_increase_norm(seed in any::<u64>()) {
        let mut rng = SetupRng::seed_from_u64(seed);
        let cfg = random_lattice(&mut rng, 8);
        let m = cfg.num_sites();
        let k = build_kernel(&build_hamiltonian(&cfg), rng.random_range(0.05..1.0)).unwrap();
        let a = random_state(&mut rng, 0, cfg.weights().clone());
        let filter = Filter::single(rng.random_range(0..=5), rng.random_range(0..m));
        let out = evolve(&a, &k, 5, &[filter]).unwrap();
        prop_assert!(out.norm_sqr() <= a.norm_sqr() * (1.0 + 1e-12));
    }

    #[test]
    fn chain_and_pathsum_agree(seed in any::<u64>()) {
        let mut rng = SetupRng::seed_from_u64(seed);
        let cfg = random_lattice(&mut rng, 8);
        let k = build_kernel(&build_hamiltonian(&cfg), rng.random_range(0.05..1.0)).unwrap();
        let s = random_canonical(&mut rng, cfg.num_sites(), 5);
        let chain = amplitude_chain(&s, &k).unwrap().value();
        let paths = amplitude_pathsum(&s, &k).unwrap().value();
        prop_assert!((chain - paths).norm() <= 1e-10);
    }

    #[test]
    fn moving_the_source_keeps_point_sourced_states(seed in any::<u64>()) {
        let mut rng = SetupRng::seed_from_u64(seed);
        let cfg = random_lattice(&mut rng, 6);
        let m = cfg.num_sites();
        let k = build_kernel(&build_hamiltonian(&cfg), rng.random_range(0.05..1.0)).unwrap();
        let (x1, x2) = (0, 1 + rng.random_range(0..m - 1));
        let build = |src: SpacetimePoint| -> Superposition { build_superposition(src, (x1, x2), 3, 6, &k).unwrap() };
        let one = build(SpacetimePoint::new(rng.random_range(0..m), 0));
        let two = build(SpacetimePoint::new(rng.random_range(0..m), 1));
        prop_assert_eq!(one.psi_prime.amplitudes(), two.psi_prime.amplitudes());
        prop_assert_eq!(one.psi_double_prime.amplitudes(), two.psi_double_prime.amplitudes());
        prop_assert!(one.state.max_abs_diff(&one.combination()) <= 1e-12);
        prop_assert!(two.state.max_abs_diff(&two.combination()) <= 1e-12);
    }
}

#[test]
fn five_sites_three_two_hole_filters() {
    let cfg = LatticeConfig::new(5, 1.0, Boundary::Reflecting, None, Some(vec![0.3, -0.1, 0.0, 0.7, -0.4])).unwrap();
    let mut rng = SetupRng::seed_from_u64(11);
    for _ in 0..50 {
        let k = build_kernel(&build_hamiltonian(&cfg), rng.random_range(0.05..1.5)).unwrap();
        let mut time = 0;
        let mut filters = Vec::new();
        for _ in 0..3 {
            time += rng.random_range(1..=3);
            let a = rng.random_range(0..5);
            let b = (a + rng.random_range(1..5)) % 5;
            filters.push(Filter::new(time, vec![a, b]).unwrap());
        }
        let s = CanonicalSetup::new(
            SpacetimePoint::new(rng.random_range(0..5), 0),
            SpacetimePoint::new(rng.random_range(0..5), time + rng.random_range(1..=3)),
            filters,
        )
        .unwrap();
        assert_eq!(s.path_count(), 8);
        let chain = amplitude_chain(&s, &k).unwrap().value();
        let paths = amplitude_pathsum(&s, &k).unwrap().value();
        assert!((chain - paths).norm() <= 1e-10, "{s}");
    }
}

#[test]
fn all_hole_filter_matches_filterless_setup() {
    let cfg = LatticeConfig::new(4, 0.8, Boundary::Periodic, None, Some(vec![1.0, 0.0, -1.0, 0.5])).unwrap();
    let k = build_kernel(&build_hamiltonian(&cfg), 0.4).unwrap();
    let bare = amplab::canonicalize(&parse("[(3,5); (1,0)]").unwrap()).unwrap();
    for t in 1..5 {
        let open = bare.with_filter(Filter::new(t, vec![0, 1, 2, 3]).unwrap()).unwrap();
        let diff = amplitude_chain(&open, &k).unwrap().value() - amplitude_chain(&bare, &k).unwrap().value();
        assert!(diff.norm() <= 1e-12, "t={t}");
    }
}

#[test]
fn weighted_lattice_state_keeps_weights_through_evolution() {
    let cfg = LatticeConfig::new(3, 1.0, Boundary::Reflecting, Some(vec![2.0, 1.0, 0.5]), None).unwrap();
    let k = build_kernel(&build_hamiltonian(&cfg), 0.2).unwrap();
    let w: Arc<[f64]> = cfg.weights().clone();
    let s = WaveState::basis(1, 0, w.clone()).unwrap();
    let out = evolve(&s, &k, 3, &[]).unwrap();
    assert_eq!(&out.weights()[..], &w[..]);
}
