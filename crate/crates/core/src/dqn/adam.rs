//! Adam over a flat parameter vector, applied range by range.
//!
//! The caller opens a step with [`Adam::begin_step`] and then applies it to
//! whichever parameter ranges carry gradient. Ranges left out keep their
//! moments untouched, which is how the output rows of actions absent from
//! a batch are skipped.

use std::ops::Range;

use crate::scalar::Real;

#[derive(Debug, Clone)]
pub struct Adam<T> {
    pub learning_rate: T,
    pub beta1: T,
    pub beta2: T,
    pub epsilon: T,
    m: Vec<T>,
    v: Vec<T>,
    t: u64,
    correction1: T,
    correction2: T,
}

impl<T: Real> Adam<T> {
    pub fn new(num_params: usize, learning_rate: T) -> Self {
        Self {
            learning_rate,
            beta1: T::of(0.9),
            beta2: T::of(0.999),
            epsilon: T::of(1e-8),
            m: vec![T::zero(); num_params],
            v: vec![T::zero(); num_params],
            t: 0,
            correction1: T::one(),
            correction2: T::one(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn begin_step(&mut self) {
        self.t += 1;
        let t = i32::try_from(self.t).unwrap_or(i32::MAX);
        self.correction1 = T::one() - self.beta1.powi(t);
        self.correction2 = T::one() - self.beta2.powi(t);
    }

    /// Updates `params[range]` from `grad[range]`.
    pub fn apply(&mut self, params: &mut [T], grad: &[T], range: Range<usize>) {
        let one = T::one();
        let (b1, b2) = (self.beta1, self.beta2);
        let (c1, c2) = (one / self.correction1, one / self.correction2);
        let lr = self.learning_rate;
        let eps = self.epsilon;
        let m = &mut self.m[range.clone()];
        let v = &mut self.v[range.clone()];
        let p = &mut params[range.clone()];
        let g = &grad[range];
        let tiny = T::min_positive_value();
        for (((p, &g), m), v) in p.iter_mut().zip(g).zip(m).zip(v) {
            *m = flush(b1 * *m + (one - b1) * g, tiny);
            *v = flush(b2 * *v + (one - b2) * g * g, tiny);
            *p -= lr * (*m * c1) / ((*v * c2).sqrt() + eps);
        }
    }

    /// Dense step over every parameter.
    pub fn step(&mut self, params: &mut [T], grad: &[T]) {
        self.begin_step();
        self.apply(params, grad, 0..params.len());
    }
}

/// Moments of parameters whose gradient stays zero decay geometrically into
/// the subnormal range, where arithmetic is several times slower; they are
/// flushed to zero instead.
#[inline]
fn flush<T: Real>(x: T, tiny: T) -> T {
    if x.abs() < tiny {
        T::zero()
    } else {
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_learning_rate() {
        // m̂ = g, v̂ = g², so the first update is lr·sign(g) up to ε.
        let mut adam = Adam::new(2, 0.01);
        let mut p = vec![1.0f64, -1.0];
        adam.step(&mut p, &[3.0, -0.5]);
        assert!((p[0] - 0.99).abs() < 1e-9);
        assert!((p[1] + 0.99).abs() < 1e-9);
    }

    #[test]
    fn decayed_moments_never_go_subnormal() {
        let mut adam = Adam::new(1, 0.01);
        let mut p = vec![0.0f64];
        adam.step(&mut p, &[1.0]);
        for _ in 0..10_000 {
            adam.step(&mut p, &[0.0]);
            assert!(adam.m[0] == 0.0 || adam.m[0].is_normal());
            assert!(adam.v[0] == 0.0 || adam.v[0].is_normal());
        }
        assert_eq!(adam.m[0], 0.0);
    }

    #[test]
    fn zero_gradient_leaves_fresh_params() {
        let mut adam = Adam::new(3, 0.1);
        let mut p = vec![0.5; 3];
        adam.step(&mut p, &[0.0; 3]);
        assert_eq!(p, vec![0.5; 3]);
    }

    #[test]
    fn skipped_ranges_are_untouched() {
        let mut adam = Adam::new(4, 0.1);
        let mut p = vec![0.0; 4];
        adam.begin_step();
        adam.apply(&mut p, &[1.0; 4], 0..2);
        assert!(p[0] < 0.0 && p[1] < 0.0);
        assert_eq!(&p[2..], &[0.0, 0.0]);
    }

    #[test]
    fn minimizes_a_quadratic() {
        let mut adam = Adam::new(1, 0.05);
        let mut p = vec![3.0f64];
        for _ in 0..2000 {
            let g = [2.0 * (p[0] - 1.0)];
            adam.step(&mut p, &g);
        }
        assert!((p[0] - 1.0).abs() < 1e-2);
    }
}
