use std::sync::Arc;

use amplab::born::{BinomialEnsemble, MAX_ENSEMBLE_DIM};
use amplab::checks::random_state;
use amplab::setup::SetupRng;
use amplab::{
    born, convergence_sweep, ensemble_distance_exact, ensemble_distance_oracle, refine_cell, FractionFilterSpec,
    WaveState,
};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};

fn weighted_state(seed: u64, max_sites: usize) -> WaveState {
    let mut rng = SetupRng::seed_from_u64(seed);
    let m = rng.random_range(2..=max_sites);
    let weights: Arc<[f64]> = (0..m).map(|_| rng.random_range(0.1..3.0)).collect();
    random_state(&mut rng, 0, weights)
}

/// Binomial pmf by exact rational arithmetic, for small N.
fn exact_pmf(n: u32, num: u128, den: u128) -> Vec<f64> {
    (0..=n)
        .map(|k| {
            let mut c: u128 = 1;
            for j in 0..k {
                c = c * (n - j) as u128 / (j + 1) as u128;
            }
            (c * num.pow(k) * (den - num).pow(n - k)) as f64 / den.pow(n) as f64
        })
        .collect()
}

#[test]
fn direct_pmf_matches_rationals() {
    for (num, den) in [(1u128, 2u128), (1, 3), (2, 7), (5, 8)] {
        let p = num as f64 / den as f64;
        for n in [1u32, 5, 12, 20] {
            let got = BinomialEnsemble::new(n as u64, p);
            for (a, b) in got.pmf().iter().zip(exact_pmf(n, num, den)) {
                assert!((a - b).abs() <= 1e-15, "n={n} p={p}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn certain_outcomes() {
    for (p, n) in [(0.0, 50u64), (1.0, 50), (0.0, 500), (1.0, 500)] {
        let e = BinomialEnsemble::new(n, p);
        let at = if p == 0.0 { 0 } else { n as usize };
        assert_eq!(e.pmf()[at], 1.0);
        assert_eq!(e.pmf().iter().sum::<f64>(), 1.0);
    }
}

#[test]
fn far_window_drives_distance_to_one() {
    let s = WaveState::unweighted(0, vec![Complex64::new(0.5, 0.0), Complex64::new(0.75f64.sqrt(), 0.0)]).unwrap();
    let rows = convergence_sweep(&s, 0, 0.5, 0.1, &[10, 100, 1_000, 10_000]).unwrap();
    assert!(rows[3].distance_sq >= 0.999);
    for r in &rows {
        assert!(r.within_envelope(), "{r:?}");
    }
}

#[test]
fn distance_shrinks_along_doubling_n() {
    for amps in [[1.0, 1.0], [0.5, 0.75f64.sqrt()], [0.2, 0.9]] {
        let s = WaveState::unweighted(0, amps.iter().map(|&a| Complex64::new(a, 0.0)).collect()).unwrap();
        let p = born(&s).unwrap().probabilities[0];
        let ns: Vec<u64> = (0..14).map(|k| 10u64 << k).collect();
        let rows = convergence_sweep(&s, 0, p, 0.05, &ns).unwrap();
        for pair in rows.windows(2) {
            assert!(
                pair[1].distance_sq <= pair[0].distance_sq,
                "p={p}: N={} {} then N={} {}",
                pair[0].replicas,
                pair[0].distance_sq,
                pair[1].replicas,
                pair[1].distance_sq
            );
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn probabilities_sum_to_one(seed in any::<u64>()) {
        let s = weighted_state(seed, 10);
        let r = born(&s).unwrap();
        prop_assert!((r.total - 1.0).abs() <= 1e-12);
        prop_assert!(r.probabilities.iter().all(|&p| p >= 0.0));
        for i in 0..s.len() {
            prop_assert_eq!(r.densities[i] * r.weights[i], r.probabilities[i]);
        }
    }

    #[test]
    fn distance_is_a_probability(seed in any::<u64>(), f in 0.0f64..=1.0, eps in 0.001f64..1.5, n in 1u64..3000) {
        let s = weighted_state(seed, 6);
        let spec = FractionFilterSpec::new(0, f, eps, n).unwrap();
        let d = ensemble_distance_exact(&s, &spec).unwrap();
        prop_assert!((-1e-15..=1.0 + 1e-12).contains(&d), "{d}");
        if eps >= 1.0 {
            prop_assert_eq!(d, 0.0);
        }
    }

    #[test]
    fn wider_windows_keep_more(seed in any::<u64>(), f in 0.0f64..=1.0, eps in 0.001f64..0.5, n in 1u64..500) {
        let s = weighted_state(seed, 6);
        let narrow = ensemble_distance_exact(&s, &FractionFilterSpec::new(1, f, eps, n).unwrap()).unwrap();
        let wide = ensemble_distance_exact(&s, &FractionFilterSpec::new(1, f, 2.0 * eps, n).unwrap()).unwrap();
        prop_assert!(wide <= narrow + 1e-15);
    }

    #[test]
    fn exact_matches_oracle(seed in any::<u64>(), f in 0.0f64..=1.0, eps in 0.01f64..0.6) {
        let s = weighted_state(seed, 5);
        let m = s.len() as u64;
        let mut max_n = 1;
        while m.pow(max_n + 1) <= MAX_ENSEMBLE_DIM.min(20_000) {
            max_n += 1;
        }
        let n = 1 + seed % max_n as u64;
        let spec = FractionFilterSpec::new((seed % m) as usize, f, eps, n).unwrap();
        let exact = ensemble_distance_exact(&s, &spec).unwrap();
        let oracle = ensemble_distance_oracle(&s, &spec).unwrap();
        prop_assert!((exact - oracle).abs() <= 1e-12);
    }

    #[test]
    fn sweep_rows_respect_envelope(seed in any::<u64>(), f in 0.0f64..=1.0, eps in 0.005f64..0.3) {
        let s = weighted_state(seed, 6);
        let rows = convergence_sweep(&s, 0, f, eps, &[10, 100, 1_000, 10_000]).unwrap();
        for r in rows {
            prop_assert!(r.distance_sq <= r.hoeffding_bound * (1.0 + 1e-12) + 1e-15, "{r:?}");
            prop_assert!(r.distance_sq >= r.lower_bound - 1e-12, "{r:?}");
        }
    }

    #[test]
    fn refinement_keeps_region_probabilities(seed in any::<u64>()) {
        let s = weighted_state(seed, 8);
        let cell = (seed % s.len() as u64) as usize;
        let before = born(&s).unwrap();
        let after = born(&refine_cell(&s, cell).unwrap()).unwrap();
        prop_assert!((after.region([cell, cell + 1]) - before.probabilities[cell]).abs() <= 1e-14);
        prop_assert_eq!(after.densities[cell], after.densities[cell + 1]);
    }

    #[test]
    fn scale_by_power_of_four_is_exact(seed in any::<u64>(), k in -8i32..8) {
        let s = weighted_state(seed, 8);
        let c = 4f64.powi(k);
        let w: Arc<[f64]> = s.weights().iter().map(|w| w * c).collect();
        let a = s.amplitudes().iter().map(|a| a / c.sqrt()).collect();
        let scaled = WaveState::new(0, a, w).unwrap();
        prop_assert_eq!(born(&scaled).unwrap().probabilities, born(&s).unwrap().probabilities);
    }
}
