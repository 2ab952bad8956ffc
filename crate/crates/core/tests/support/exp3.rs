//! EXP3 checks against exhaustive expectations and known-answer bandits.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use s2l_core::exp3::Exp3;

pub fn agent(log_weights: &[f64], gamma: f64) -> Exp3<f64> {
    let mut e = Exp3::new(log_weights.len(), gamma).unwrap();
    e.restore(log_weights).unwrap();
    e
}

/// E[x̂_j] = Σ_i p_i · [i = j] · r_j / p_j = r_j for every arm, enumerated
/// over the three possible draws. Returns the largest deviation.
pub fn check_unbiased_exhaustive() -> f64 {
    let e = agent(&[0.3, -1.2, 2.0], 0.2);
    let rewards = [0.7, 0.1, 0.45];
    let p = e.probabilities();
    let mut worst = 0.0f64;
    for j in 0..3 {
        let expectation: f64 = (0..3)
            .map(|i| {
                if i == j {
                    p[i] * rewards[j] / p[j]
                } else {
                    0.0
                }
            })
            .sum();
        worst = worst.max((expectation - rewards[j]).abs());
    }
    assert!(worst < 1e-12, "deviation {worst}");
    worst
}

/// A million updates on 100 arms; the distribution must still sum to one
/// and respect the γ/K floor. Returns (|Σp − 1|, min p / floor).
pub fn check_simplex_after_million_updates() -> (f64, f64) {
    let k = 100;
    let gamma = 0.01;
    let mut e = Exp3::<f64>::new(k, gamma).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..1_000_000 {
        let a = e.select(&mut rng);
        let r = if a.is_multiple_of(10) {
            rng.gen_range(0.8..=1.0)
        } else {
            rng.gen_range(0.0..0.3)
        };
        e.update(a, r).unwrap();
    }
    assert!(e.renormalizations() > 0);
    let p = e.probabilities();
    let sum_err = (p.iter().sum::<f64>() - 1.0).abs();
    assert!(sum_err < 1e-9, "sum off by {sum_err}");
    let floor = gamma / k as f64;
    assert!(p.iter().all(|x| x.is_finite()));
    let min_ratio = p.iter().fold(f64::INFINITY, |m, &x| m.min(x / floor));
    assert!(
        min_ratio >= 1.0 - 1e-9,
        "probability below floor: {min_ratio}"
    );
    (sum_err, min_ratio)
}

/// Two Bernoulli arms (0.9 vs 0.1) at γ = 0.1; returns the better arm's
/// probability after `steps` updates.
pub fn bernoulli_better_arm_probability(steps: usize) -> f64 {
    let mut e = Exp3::<f64>::new(2, 0.1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..steps {
        let a = e.select(&mut rng);
        let win = rng.gen_bool(if a == 0 { 0.9 } else { 0.1 });
        e.update(a, if win { 1.0 } else { 0.0 }).unwrap();
    }
    e.probability(0)
}
