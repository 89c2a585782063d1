//! Acceptance run: one PASS/FAIL line per criterion.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use amplab::born::{convergence_sweep, MAX_ENSEMBLE_DIM};
use amplab::checks::{ensemble_pair, random_state, run_suite, CheckContext, Suite, SuiteReport};
use amplab::setup::SetupRng;
use amplab::{born, born_argmax, ensemble_distance_exact, refine_cell, FractionFilterSpec, WaveState};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};

struct Outcome {
    pass: bool,
    detail: String,
}

fn suite_outcome(reports: &[SuiteReport], elapsed: Duration, budget: Option<Duration>) -> Outcome {
    let mut pass = reports.iter().all(SuiteReport::passed);
    let mut parts: Vec<String> = reports
        .iter()
        .map(|r| format!("{} {}/{} worst {:.3e}", r.suite, r.cases - r.failures.len() as u64, r.cases, r.worst))
        .collect();
    for r in reports {
        if let Some(f) = r.failures.first() {
            parts.push(format!("first failure (seed {}): {}", f.seed, f.detail));
        }
    }
    if let Some(budget) = budget {
        pass &= elapsed < budget;
        parts.push(format!("{:.2}s of {}s", elapsed.as_secs_f64(), budget.as_secs()));
    }
    Outcome {
        pass,
        detail: parts.join("; "),
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn sum_and_product() -> Outcome {
    let ctx = CheckContext::default();
    let (reports, t) = timed(|| {
        vec![
            run_suite(Suite::Homomorphism, &ctx, 0, 500),
            run_suite(Suite::SumRule, &ctx, 0, 500),
        ]
    });
    suite_outcome(&reports, t, Some(Duration::from_secs(10)))
}

fn rewrite_invariance() -> Outcome {
    let (reports, t) = timed(|| vec![run_suite(Suite::RewriteInvariance, &CheckContext::default(), 0, 1000)]);
    suite_outcome(&reports, t, Some(Duration::from_secs(30)))
}

fn transparent_filter() -> Outcome {
    let (reports, t) = timed(|| vec![run_suite(Suite::TransparentFilter, &CheckContext::default(), 0, 200)]);
    suite_outcome(&reports, t, None)
}

fn schrodinger() -> Outcome {
    let (reports, t) = timed(|| vec![run_suite(Suite::Schrodinger, &CheckContext::default(), 0, 20)]);
    suite_outcome(&reports, t, None)
}

fn superposition() -> Outcome {
    let (reports, t) = timed(|| vec![run_suite(Suite::Superposition, &CheckContext::default(), 0, 100)]);
    suite_outcome(&reports, t, None)
}

/// Every `(M, N)` with `M <= 16` inside the guard, plus the larger lattices
/// reachable at `N = 1, 2`.
fn ensemble_grid() -> Vec<(usize, u64)> {
    let mut grid = Vec::new();
    for m in 2..=16usize {
        let mut n = 1u32;
        while (m as u64).pow(n) <= MAX_ENSEMBLE_DIM {
            grid.push((m, n as u64));
            n += 1;
        }
    }
    for m in [32, 64, 128, 256, 447] {
        grid.push((m, 1));
        grid.push((m, 2));
    }
    for m in [1_000, 10_000, 200_000] {
        grid.push((m, 1));
    }
    grid
}

fn ensemble_exact_vs_oracle() -> Outcome {
    let start = Instant::now();
    let grid = ensemble_grid();
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    for (i, &(m, n)) in grid.iter().enumerate() {
        for case in 0..50u64 {
            let mut rng = SetupRng::seed_from_u64(i as u64 * 1000 + case);
            let weights: Arc<[f64]> = (0..m).map(|_| rng.random_range(0.25..2.0)).collect();
            let state = random_state(&mut rng, 0, weights);
            let spec = FractionFilterSpec::new(
                rng.random_range(0..m),
                rng.random_range(0.0..=1.0),
                rng.random_range(0.01..0.5),
                n,
            )
            .expect("valid spec");
            match ensemble_pair(&state, &spec) {
                Ok(err) => worst = worst.max(err),
                Err(e) => failures.push(format!("M={m} N={n} case {case}: {e}")),
            }
        }
    }
    let elapsed = start.elapsed();
    let budget = Duration::from_secs(60);
    Outcome {
        pass: failures.is_empty() && elapsed < budget,
        detail: format!(
            "{} (M,N) pairs x 50 cases, {} failures, worst {:.3e}; {:.2}s of {}s{}",
            grid.len(),
            failures.len(),
            worst,
            elapsed.as_secs_f64(),
            budget.as_secs(),
            failures.first().map(|f| format!("; first: {f}")).unwrap_or_default()
        ),
    }
}

fn unit_state(amps: &[f64]) -> WaveState {
    WaveState::unweighted(0, amps.iter().map(|&a| Complex64::new(a, 0.0)).collect()).unwrap()
}

fn golden() -> Outcome {
    let state = unit_state(&[1.0, 1.0]);
    let spec = FractionFilterSpec::new(0, 0.5, 0.05, 10).unwrap();
    let d = ensemble_distance_exact(&state, &spec).unwrap();
    Outcome {
        pass: d == 0.75390625,
        detail: format!("distance^2 = {d:?}"),
    }
}

fn large_numbers() -> Outcome {
    let ns = [10u64, 100, 1_000, 10_000];
    let mut pass = true;
    let mut parts = Vec::new();
    let third = (1.0f64 / 3.0).sqrt();
    let cases: [(&[f64], f64); 4] = [
        (&[1.0, 1.0], 0.05),
        (&[0.5, 0.75f64.sqrt()], 0.02),
        (&[third, (2.0f64 / 3.0).sqrt()], 0.05),
        (&[0.3, 0.4, 0.5, 0.6], 0.01),
    ];
    for (amps, eps) in cases {
        let state = unit_state(amps);
        let p = born(&state).unwrap().probabilities[0];
        let rows = convergence_sweep(&state, 0, p, eps, &ns).unwrap();
        for r in &rows {
            let bound = 2.0 * (-2.0 * r.replicas as f64 * eps * eps).exp();
            if r.distance_sq > bound {
                pass = false;
                parts.push(format!("p={p} eps={eps} N={}: {} > {bound}", r.replicas, r.distance_sq));
            }
        }
        parts.push(format!("p={p:.4} eps={eps}: d2(1e4)={:.3e}", rows[3].distance_sq));
    }
    let far = unit_state(&[0.5, 0.75f64.sqrt()]);
    let d = convergence_sweep(&far, 0, 0.5, 0.1, &[10_000]).unwrap()[0].distance_sq;
    pass &= d >= 0.999;
    parts.push(format!("|f-p|>eps: d2(1e4)={d}"));
    Outcome {
        pass,
        detail: parts.join("; "),
    }
}

fn born_recovery() -> Outcome {
    let mut worst = 0.0f64;
    let mut pass = true;
    for case in 0..20u64 {
        let mut rng = SetupRng::seed_from_u64(9000 + case);
        let m = rng.random_range(2..=8);
        let state = random_state(&mut rng, 0, vec![1.0; m].into());
        let site = rng.random_range(0..m);
        let p = born(&state).unwrap().probabilities[site];
        let f = born_argmax(&state, site, 1_000, 0.01).unwrap();
        worst = worst.max((f - p).abs());
        pass &= (f - p).abs() <= 0.01;
    }
    Outcome {
        pass,
        detail: format!("20 states, max |argmax - p| = {worst:.4} (cell 0.01)"),
    }
}

fn weighted_born() -> Outcome {
    let mut exact_pass = true;
    let mut generic_dev = 0.0f64;
    let mut refine_dev = 0.0f64;
    for case in 0..50u64 {
        let mut rng = SetupRng::seed_from_u64(7000 + case);
        let m = rng.random_range(2..=8);
        let weights: Arc<[f64]> = (0..m).map(|_| rng.random_range(0.25..2.0)).collect();
        let state = random_state(&mut rng, 0, weights.clone());
        let before = born(&state).unwrap();
        let rescale = |c: f64| {
            let w: Arc<[f64]> = weights.iter().map(|w| w * c).collect();
            let a = state.amplitudes().iter().map(|a| a / c.sqrt()).collect();
            born(&WaveState::new(0, a, w).unwrap()).unwrap()
        };
        for c in [4.0, 0.25, 16.0, 1024.0] {
            exact_pass &= rescale(c).probabilities == before.probabilities;
        }
        let c = rng.random_range(0.1..10.0);
        for (a, b) in rescale(c).probabilities.iter().zip(&before.probabilities) {
            generic_dev = generic_dev.max((a - b).abs() / b.max(f64::MIN_POSITIVE));
        }

        let cell = rng.random_range(0..m);
        let split = refine_cell(&state, cell).unwrap();
        let after = born(&split).unwrap();
        for i in 0..m {
            let region: Vec<usize> = match i.cmp(&cell) {
                std::cmp::Ordering::Less => vec![i],
                std::cmp::Ordering::Equal => vec![i, i + 1],
                std::cmp::Ordering::Greater => vec![i + 1],
            };
            refine_dev = refine_dev.max((after.region(region) - before.probabilities[i]).abs());
        }
    }
    Outcome {
        pass: exact_pass && generic_dev <= 1e-15 && refine_dev <= 1e-14,
        detail: format!(
            "scale by powers of 4 bit-exact: {exact_pass}; other c max rel dev {generic_dev:.2e}; refinement max dev {refine_dev:.2e}"
        ),
    }
}

fn null_detection() -> Outcome {
    let (reports, t) = timed(|| vec![run_suite(Suite::NullDetection, &CheckContext::default(), 0, 200)]);
    suite_outcome(&reports, t, None)
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("sum and product rules", sum_and_product),
        ("rewrite invariance", rewrite_invariance),
        ("transparent filter", transparent_filter),
        ("schrodinger equivalence", schrodinger),
        ("superposition construction", superposition),
        ("ensemble exact vs oracle", ensemble_exact_vs_oracle),
        ("ensemble golden value", golden),
        ("law of large numbers envelope", large_numbers),
        ("born rule recovery", born_recovery),
        ("weighted born and refinement", weighted_born),
        ("null detection", null_detection),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = run();
        if !outcome.pass {
            failed += 1;
        }
        println!(
            "[{}] {:>2} {name}: {}",
            if outcome.pass { "PASS" } else { "FAIL" },
            i + 1,
            outcome.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
