//! Statistical and invariant checks on the EXP3 sampler.

mod support;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use support::exp3::*;

#[test]
fn importance_estimate_is_unbiased_exhaustively() {
    check_unbiased_exhaustive();
}

#[test]
fn importance_estimate_is_unbiased_by_simulation() {
    // Average per-arm log-weight growth, rescaled by K/γ, estimates r_j.
    let gamma = 0.3;
    let base = [0.0, -0.5, 0.4];
    let rewards = [0.6, 0.2, 0.9];
    let trials = 200_000;
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut sums = [0.0f64; 3];
    let mut sq = [0.0f64; 3];
    for _ in 0..trials {
        let mut e = agent(&base, gamma);
        let before: Vec<f64> = e.weights().iter().map(|w| w.ln()).collect();
        let a = e.select(&mut rng);
        e.update(a, rewards[a]).unwrap();
        let after: Vec<f64> = e.weights().iter().map(|w| w.ln()).collect();
        for j in 0..3 {
            let x = (after[j] - before[j]) * 3.0 / gamma;
            sums[j] += x;
            sq[j] += x * x;
        }
    }
    let n = trials as f64;
    for j in 0..3 {
        let mean = sums[j] / n;
        let var = sq[j] / n - mean * mean;
        let se = (var / n).sqrt();
        assert!(
            (mean - rewards[j]).abs() < 4.0 * se,
            "arm {j}: {mean} vs {}",
            rewards[j]
        );
    }
}

#[test]
fn empirical_frequencies_match_probabilities() {
    let e = agent(&[0.0, 1.0, -1.0, 0.5, 2.0], 0.1);
    let p = e.probabilities();
    let n = 200_000;
    let mut counts = [0usize; 5];
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..n {
        counts[e.sample(&mut rng)] += 1;
    }
    let chi2: f64 = counts
        .iter()
        .zip(&p)
        .map(|(&c, &pi)| {
            let expected = pi * n as f64;
            (c as f64 - expected).powi(2) / expected
        })
        .sum();
    // 4 degrees of freedom, upper 1e-4 tail.
    assert!(chi2 < 23.51, "chi2 = {chi2}");
    for (&c, &pi) in counts.iter().zip(&p) {
        let mean = pi * n as f64;
        let sd = (n as f64 * pi * (1.0 - pi)).sqrt();
        assert!((c as f64 - mean).abs() < 3.0 * sd + 1.0);
    }
}

#[test]
fn distribution_stays_on_simplex_after_a_million_updates() {
    check_simplex_after_million_updates();
}

#[test]
fn learns_the_better_bernoulli_arm() {
    let p = bernoulli_better_arm_probability(20_000);
    assert!(p > 0.9, "{p}");
}

proptest! {
    #[test]
    fn probabilities_form_a_floored_simplex(
        lw in prop::collection::vec(-50.0f64..50.0, 1..64),
        gamma in 0.001f64..1.0,
    ) {
        let e = agent(&lw, gamma);
        let p = e.probabilities();
        let floor = gamma / lw.len() as f64;
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(p.iter().all(|&x| x >= floor * (1.0 - 1e-12)));
    }

    #[test]
    fn common_weight_scale_does_not_matter(
        lw in prop::collection::vec(-20.0f64..20.0, 2..32),
        shift in -100.0f64..100.0,
        gamma in 0.01f64..1.0,
    ) {
        let shifted: Vec<f64> = lw.iter().map(|x| x + shift).collect();
        let a = agent(&lw, gamma).probabilities();
        let b = agent(&shifted, gamma).probabilities();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn snapshot_roundtrip(
        lw in prop::collection::vec(-20.0f64..20.0, 1..32),
        gamma in 0.01f64..1.0,
    ) {
        let a = agent(&lw, gamma);
        let b = agent(&a.snapshot(), gamma);
        for (x, y) in a.probabilities().iter().zip(b.probabilities()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }
}
