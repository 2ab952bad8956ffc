use rand::Rng;
use serde::{Deserialize, Serialize};

use super::EnvError;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QualityMode {
    /// Independent uniform draws on `[q_low, q_high]` per model and step.
    Stationary,
    /// Attacker toggling every `period` steps between `q_high` and `q_low`.
    Adversary,
}

/// Generator of the per-model data quality factor `q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QualityProcess<T> {
    pub mode: QualityMode,
    pub q_low: T,
    pub q_high: T,
    #[serde(default = "default_period")]
    pub period: u32,
}

fn default_period() -> u32 {
    1
}

impl<T: Real> QualityProcess<T> {
    pub fn stationary(q_low: T, q_high: T) -> Self {
        Self {
            mode: QualityMode::Stationary,
            q_low,
            q_high,
            period: 1,
        }
    }

    pub fn adversary(q_low: T, q_high: T, period: u32) -> Self {
        Self {
            mode: QualityMode::Adversary,
            q_low,
            q_high,
            period,
        }
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        let in_unit = |q: T| q > T::zero() && q <= T::one();
        if !(in_unit(self.q_low) && in_unit(self.q_high) && self.q_low <= self.q_high) {
            return Err(EnvError::InvalidQuality(
                "need 0 < q_low <= q_high <= 1".into(),
            ));
        }
        if self.mode == QualityMode::Adversary && self.period == 0 {
            return Err(EnvError::InvalidQuality(
                "attacker period must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Expected quality factor of a single draw.
    pub fn mean(&self) -> T {
        (self.q_low + self.q_high) / T::of(2.0)
    }

    /// Quality factors for step `t`, written into `out` (one per model).
    ///
    /// The adversary mode consumes no randomness.
    pub fn sample_into<R: Rng + ?Sized>(&self, t: u64, out: &mut [T], rng: &mut R) {
        match self.mode {
            QualityMode::Stationary => {
                let span = self.q_high - self.q_low;
                for q in out.iter_mut() {
                    *q = self.q_low + span * T::of(rng.gen::<f64>());
                }
            }
            QualityMode::Adversary => {
                let q = if (t / u64::from(self.period)).is_multiple_of(2) {
                    self.q_high
                } else {
                    self.q_low
                };
                out.fill(q);
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, t: u64, models: usize, rng: &mut R) -> Vec<T> {
        let mut out = vec![T::zero(); models];
        self.sample_into(t, &mut out, rng);
        out
    }
}
