use serde::{Deserialize, Serialize};

use super::EnvError;
use crate::scalar::{clamp, Real};

/// Points used by the construction-time monotonicity check.
pub const MONOTONICITY_SAMPLES: usize = 1000;

/// Three-term exponential learning curve over normalized training effort.
///
/// `A(u) = a1·exp(b1·u) + a2·exp(b2·u) + a3·exp(b3·u)`, clamped to `[0, 1]`,
/// where `u = data_fraction · epochs / max_epochs`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawAccuracyModel<T>", into = "RawAccuracyModel<T>")]
#[serde(bound(
    serialize = "T: Real + Serialize",
    deserialize = "T: Real + Deserialize<'de>"
))]
pub struct AccuracyModel<T> {
    amplitudes: [T; 3],
    rates: [T; 3],
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAccuracyModel<T> {
    amplitudes: [T; 3],
    rates: [T; 3],
}

impl<T: Real> TryFrom<RawAccuracyModel<T>> for AccuracyModel<T> {
    type Error = EnvError;

    fn try_from(raw: RawAccuracyModel<T>) -> Result<Self, Self::Error> {
        AccuracyModel::new(raw.amplitudes, raw.rates)
    }
}

impl<T: Real> From<AccuracyModel<T>> for RawAccuracyModel<T> {
    fn from(m: AccuracyModel<T>) -> Self {
        RawAccuracyModel {
            amplitudes: m.amplitudes,
            rates: m.rates,
        }
    }
}

impl<T: Real> AccuracyModel<T> {
    /// Builds a model, rejecting non-finite coefficients and curves that are
    /// not non-decreasing on `[0, 1]`.
    pub fn new(amplitudes: [T; 3], rates: [T; 3]) -> Result<Self, EnvError> {
        if amplitudes
            .iter()
            .chain(rates.iter())
            .any(|c| !c.is_finite())
        {
            return Err(EnvError::InvalidAccuracyModel(
                "coefficients must be finite".into(),
            ));
        }
        let model = Self { amplitudes, rates };
        // Slack absorbs rounding where the curve is flat or clamped.
        let slack = T::epsilon() * T::of(16.0);
        let mut prev = model.at_effort(T::zero());
        for i in 1..=MONOTONICITY_SAMPLES {
            let u = T::of_usize(i) / T::of_usize(MONOTONICITY_SAMPLES);
            let cur = model.at_effort(u);
            if cur + slack < prev {
                return Err(EnvError::InvalidAccuracyModel(format!(
                    "accuracy decreases near effort {}",
                    u.as_f64()
                )));
            }
            prev = cur;
        }
        Ok(model)
    }

    pub fn amplitudes(&self) -> [T; 3] {
        self.amplitudes
    }

    pub fn rates(&self) -> [T; 3] {
        self.rates
    }

    /// Accuracy at normalized effort `u`.
    #[inline]
    pub fn at_effort(&self, u: T) -> T {
        let raw = self
            .amplitudes
            .iter()
            .zip(self.rates.iter())
            .fold(T::zero(), |acc, (&a, &b)| acc + a * (b * u).exp());
        clamp(raw, T::zero(), T::one())
    }

    /// Accuracy reached by training on `data_fraction` of the dataset for
    /// `epochs` epochs out of a grid maximum of `max_epochs`.
    pub fn evaluate(&self, data_fraction: T, epochs: u32, max_epochs: u32) -> T {
        self.at_effort(normalized_effort(data_fraction, epochs, max_epochs))
    }
}

/// `u = data_fraction · epochs / max_epochs`.
#[inline]
pub fn normalized_effort<T: Real>(data_fraction: T, epochs: u32, max_epochs: u32) -> T {
    data_fraction * T::of(f64::from(epochs)) / T::of(f64::from(max_epochs.max(1)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> AccuracyModel<f64> {
        AccuracyModel::new([0.95, -0.5, -0.3], [0.0, -5.0, -9.0]).unwrap()
    }

    #[test]
    fn closed_form_endpoints() {
        let m = reference();
        assert!((m.at_effort(0.0) - 0.15).abs() < 1e-12);
        // 0.95 - 0.5 e^-5 - 0.3 e^-9
        let expected = 0.95 - 0.5 * (-5.0f64).exp() - 0.3 * (-9.0f64).exp();
        assert!((m.at_effort(1.0) - expected).abs() < 1e-12);
        assert!((m.at_effort(1.0) - 0.9466).abs() < 1e-4);
    }

    #[test]
    fn single_term_is_constant() {
        let m = AccuracyModel::new([0.7, 0.0, 0.0], [0.0, -3.0, 2.0]).unwrap();
        for i in 0..=10 {
            assert_eq!(m.at_effort(f64::from(i) / 10.0), 0.7);
        }
        let over = AccuracyModel::new([1.4, 0.0, 0.0], [0.0, 0.0, 0.0]).unwrap();
        assert_eq!(over.at_effort(0.5), 1.0);
        let under = AccuracyModel::new([-0.2, 0.0, 0.0], [0.0, 0.0, 0.0]).unwrap();
        assert_eq!(under.at_effort(0.5), 0.0);
    }

    #[test]
    fn rejects_decreasing_curve() {
        let err = AccuracyModel::new([0.2, 0.5, 0.0], [0.0, -3.0, 0.0]).unwrap_err();
        assert!(matches!(err, EnvError::InvalidAccuracyModel(_)));
        assert!(AccuracyModel::new([f64::NAN, 0.0, 0.0], [0.0; 3]).is_err());
    }

    #[test]
    fn evaluate_uses_normalized_effort() {
        let m = reference();
        assert_eq!(m.evaluate(0.5, 10, 20), m.at_effort(0.25));
        assert_eq!(m.evaluate(1.0, 20, 20), m.at_effort(1.0));
    }

    #[test]
    fn works_in_single_precision() {
        let m = AccuracyModel::<f32>::new([0.95, -0.5, -0.3], [0.0, -5.0, -9.0]).unwrap();
        assert!((m.at_effort(0.0) - 0.15).abs() < 1e-6);
    }
}
