//! EXP3 adversarial bandit over the joint action space.
//!
//! Weights live in the log domain; whenever the largest log weight passes
//! [`RENORMALIZE_ABOVE`] all of them are shifted down by the maximum. A sum
//! tree over `exp(log_weight)` gives `O(log K)` sampling and updates, so
//! million-step runs over tens of thousands of arms stay cheap.

use rand::Rng;
use thiserror::Error;

use crate::scalar::Real;

/// Log-weight level that triggers max-subtraction.
pub const RENORMALIZE_ABOVE: f64 = 30.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Exp3Error {
    #[error("exploration rate must lie in (0, 1], got {0}")]
    InvalidGamma(f64),
    #[error("EXP3 needs at least one action")]
    NoActions,
    #[error("reward {0} outside [0, 1]")]
    RewardOutOfRange(f64),
    #[error("update for action {got} but last selection was {expected:?}")]
    NotSelected { expected: Option<usize>, got: usize },
    #[error("snapshot has {got} weights, expected {expected}")]
    SnapshotLength { expected: usize, got: usize },
    #[error("snapshot weights must be finite")]
    SnapshotNotFinite,
}

/// Complete binary tree of partial sums over the leaves.
#[derive(Debug, Clone)]
struct SumTree<T> {
    leaves: usize,
    nodes: Vec<T>,
}

impl<T: Real> SumTree<T> {
    fn new(values: &[T]) -> Self {
        let leaves = values.len().next_power_of_two();
        let mut tree = Self {
            leaves,
            nodes: vec![T::zero(); 2 * leaves],
        };
        tree.rebuild(values);
        tree
    }

    fn rebuild(&mut self, values: &[T]) {
        self.nodes.iter_mut().for_each(|n| *n = T::zero());
        self.nodes[self.leaves..self.leaves + values.len()].copy_from_slice(values);
        for i in (1..self.leaves).rev() {
            self.nodes[i] = self.nodes[2 * i] + self.nodes[2 * i + 1];
        }
    }

    fn total(&self) -> T {
        self.nodes[1]
    }

    fn set(&mut self, index: usize, value: T) {
        let mut i = self.leaves + index;
        self.nodes[i] = value;
        while i > 1 {
            i /= 2;
            self.nodes[i] = self.nodes[2 * i] + self.nodes[2 * i + 1];
        }
    }

    /// Leaf whose cumulative interval contains `target`.
    fn find(&self, mut target: T) -> usize {
        let mut i = 1;
        while i < self.leaves {
            let left = self.nodes[2 * i];
            if target < left || self.nodes[2 * i + 1] <= T::zero() {
                i *= 2;
            } else {
                target -= left;
                i = 2 * i + 1;
            }
        }
        i - self.leaves
    }
}

#[derive(Debug, Clone)]
pub struct Exp3<T> {
    gamma: T,
    log_weights: Vec<T>,
    tree: SumTree<T>,
    /// Action and probability of the pending selection.
    last: Option<(usize, T)>,
    renormalizations: u64,
}

impl<T: Real> Exp3<T> {
    /// Uniform start: every weight is 1.
    pub fn new(actions: usize, gamma: T) -> Result<Self, Exp3Error> {
        if actions == 0 {
            return Err(Exp3Error::NoActions);
        }
        if !(gamma > T::zero() && gamma <= T::one()) {
            return Err(Exp3Error::InvalidGamma(gamma.as_f64()));
        }
        Ok(Self {
            gamma,
            log_weights: vec![T::zero(); actions],
            tree: SumTree::new(&vec![T::one(); actions]),
            last: None,
            renormalizations: 0,
        })
    }

    pub fn num_actions(&self) -> usize {
        self.log_weights.len()
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }

    /// How often the log weights were shifted by their maximum.
    pub fn renormalizations(&self) -> u64 {
        self.renormalizations
    }

    fn k(&self) -> T {
        T::of_usize(self.log_weights.len())
    }

    /// `p_i = (1 - γ)·w_i / Σw + γ / K`.
    pub fn probability(&self, action: usize) -> T {
        let w = self.tree.nodes[self.tree.leaves + action];
        (T::one() - self.gamma) * w / self.tree.total() + self.gamma / self.k()
    }

    /// The full sampling distribution.
    pub fn probabilities(&self) -> Vec<T> {
        (0..self.num_actions())
            .map(|i| self.probability(i))
            .collect()
    }

    /// Weights relative to the current maximum-subtracted log scale.
    pub fn weights(&self) -> Vec<T> {
        self.log_weights.iter().map(|lw| lw.exp()).collect()
    }

    /// Shannon entropy (nats) of the sampling distribution.
    pub fn entropy(&self) -> T {
        self.probabilities()
            .into_iter()
            .filter(|&p| p > T::zero())
            .fold(T::zero(), |h, p| h - p * p.ln())
    }

    /// Draws an action from the current distribution and remembers its
    /// probability for the following [`update`](Self::update).
    pub fn select<R: Rng + ?Sized>(&mut self, rng: &mut R) -> usize {
        let action = self.sample(rng);
        self.last = Some((action, self.probability(action)));
        action
    }

    /// Draws without touching the pending selection.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let explore: f64 = rng.gen();
        if T::of(explore) < self.gamma {
            rng.gen_range(0..self.num_actions())
        } else {
            self.sample_exploit(rng)
        }
    }

    /// Draws from the weights alone, leaving out the uniform exploration
    /// share. Used to evaluate a trained agent.
    pub fn sample_exploit<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        self.tree.find(T::of(u) * self.tree.total())
    }

    /// Importance-weighted exponential update of the selected arm:
    /// `w ← w·exp(γ·(r / p) / K)`.
    pub fn update(&mut self, chosen: usize, reward: T) -> Result<(), Exp3Error> {
        if !(reward >= T::zero() && reward <= T::one()) {
            return Err(Exp3Error::RewardOutOfRange(reward.as_f64()));
        }
        let p = match self.last {
            Some((a, p)) if a == chosen => p,
            other => {
                return Err(Exp3Error::NotSelected {
                    expected: other.map(|(a, _)| a),
                    got: chosen,
                })
            }
        };
        self.last = None;
        if reward == T::zero() {
            return Ok(());
        }
        let estimate = reward / p;
        let lw = self.log_weights[chosen] + self.gamma * estimate / self.k();
        self.log_weights[chosen] = lw;
        if lw > T::of(RENORMALIZE_ABOVE) {
            self.renormalize();
        } else {
            self.tree.set(chosen, lw.exp());
        }
        Ok(())
    }

    fn renormalize(&mut self) {
        let max = self
            .log_weights
            .iter()
            .copied()
            .fold(T::neg_infinity(), T::max);
        for lw in &mut self.log_weights {
            *lw -= max;
        }
        let w = self.weights();
        self.tree.rebuild(&w);
        self.renormalizations += 1;
    }

    /// Log weights shifted so the largest is zero.
    pub fn snapshot(&self) -> Vec<T> {
        let max = self
            .log_weights
            .iter()
            .copied()
            .fold(T::neg_infinity(), T::max);
        self.log_weights.iter().map(|&lw| lw - max).collect()
    }

    pub fn restore(&mut self, log_weights: &[T]) -> Result<(), Exp3Error> {
        if log_weights.len() != self.log_weights.len() {
            return Err(Exp3Error::SnapshotLength {
                expected: self.log_weights.len(),
                got: log_weights.len(),
            });
        }
        if log_weights.iter().any(|w| !w.is_finite()) {
            return Err(Exp3Error::SnapshotNotFinite);
        }
        self.log_weights.copy_from_slice(log_weights);
        self.renormalize();
        self.last = None;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    /// Textbook EXP3 distribution computed from explicit weights.
    fn reference_probs(w: &[f64], gamma: f64) -> Vec<f64> {
        let s: f64 = w.iter().sum();
        let k = w.len() as f64;
        w.iter()
            .map(|x| (1.0 - gamma) * x / s + gamma / k)
            .collect()
    }

    fn with_log_weights(lw: &[f64], gamma: f64) -> Exp3<f64> {
        let mut e = Exp3::new(lw.len(), gamma).unwrap();
        e.restore(lw).unwrap();
        e
    }

    #[test]
    fn uniform_start() {
        let e = Exp3::<f64>::new(7, 0.3).unwrap();
        for p in e.probabilities() {
            assert!((p - 1.0 / 7.0).abs() < 1e-15);
        }
    }

    #[test]
    fn two_arm_hand_case() {
        let e = with_log_weights(&[3f64.ln(), 0.0], 0.5);
        let p = e.probabilities();
        assert!((p[0] - 0.625).abs() < 1e-12);
        assert!((p[1] - 0.375).abs() < 1e-12);
        for (a, b) in p.iter().zip(reference_probs(&[3.0, 1.0], 0.5)) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn update_hand_case() {
        let mut e = Exp3::<f64>::new(2, 0.5).unwrap();
        e.last = Some((0, e.probability(0)));
        e.update(0, 1.0).unwrap();
        let w = e.weights();
        assert!((w[0] - 0.5f64.exp()).abs() < 1e-12);
        assert_eq!(w[1], 1.0);
        let expected = reference_probs(&[0.5f64.exp(), 1.0], 0.5)[0];
        assert!((e.probability(0) - expected).abs() < 1e-12);
        assert!((e.probability(0) - 0.5613).abs() < 1e-4);
    }

    #[test]
    fn zero_reward_keeps_weights() {
        let mut e = Exp3::<f64>::new(5, 0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..1000 {
            let a = e.select(&mut rng);
            e.update(a, 0.0).unwrap();
        }
        assert!(e.weights().iter().all(|&w| w == 1.0));
        assert!(e.probabilities().iter().all(|&p| (p - 0.2).abs() < 1e-15));
    }

    #[test]
    fn update_errors() {
        let mut e = Exp3::<f64>::new(3, 0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(matches!(
            e.update(0, 0.5),
            Err(Exp3Error::NotSelected { expected: None, .. })
        ));
        let a = e.select(&mut rng);
        assert!(matches!(
            e.update(a, 1.5),
            Err(Exp3Error::RewardOutOfRange(_))
        ));
        assert!(matches!(
            e.update(a, -0.1),
            Err(Exp3Error::RewardOutOfRange(_))
        ));
        assert!(matches!(
            e.update((a + 1) % 3, 0.5),
            Err(Exp3Error::NotSelected { .. })
        ));
        assert!(e.update(a, 0.5).is_ok());
        assert!(Exp3::<f64>::new(0, 0.1).is_err());
        assert!(Exp3::<f64>::new(3, 0.0).is_err());
        assert!(Exp3::<f64>::new(3, 1.5).is_err());
    }

    #[test]
    fn renormalization_preserves_distribution() {
        let lw = [0.0, 1.0, 2.5, -3.0];
        let a = with_log_weights(&lw, 0.2);
        let shifted: Vec<f64> = lw.iter().map(|x| x + 25.0).collect();
        let b = with_log_weights(&shifted, 0.2);
        for (p, q) in a.probabilities().iter().zip(b.probabilities()) {
            assert!((p - q).abs() < 1e-12);
        }
        let mut e = Exp3::<f64>::new(2, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..2000 {
            let a = e.select(&mut rng);
            e.update(a, if a == 0 { 1.0 } else { 0.0 }).unwrap();
        }
        assert!(e.renormalizations() > 0);
        assert!(e.snapshot().iter().all(|w| w.is_finite()));
    }

    #[test]
    fn dominant_arm_is_chosen() {
        let e = with_log_weights(&[0.0, -200.0, -200.0], 1e-9);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        assert!((0..10_000).all(|_| e.sample(&mut rng) == 0));
    }

    #[test]
    fn selection_is_reproducible() {
        let run = |seed| {
            let mut e = Exp3::<f64>::new(50, 0.1).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..500)
                .map(|_| {
                    let a = e.select(&mut rng);
                    e.update(a, (a % 7) as f64 / 7.0).unwrap();
                    a
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(run(11), run(11));
        assert_ne!(run(11), run(12));
    }

    #[test]
    fn sum_tree_padding_never_sampled() {
        let e = Exp3::<f64>::new(5, 0.01).unwrap();
        assert_eq!(e.tree.leaves, 8);
        assert_eq!(e.tree.find(5.0 - 1e-12), 4);
        assert_eq!(e.tree.find(5.0 + 1.0), 4);
    }

    #[test]
    fn single_precision() {
        let mut e = Exp3::<f32>::new(4, 0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10_000 {
            let a = e.select(&mut rng);
            e.update(a, if a == 2 { 1.0 } else { 0.1 }).unwrap();
        }
        let p = e.probabilities();
        assert!((p.iter().sum::<f32>() - 1.0).abs() < 1e-5);
        assert!(p[2] > 0.5);
    }
}
