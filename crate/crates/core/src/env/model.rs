use serde::{Deserialize, Serialize};

use super::{AccuracyModel, EnvError};
use crate::scalar::Real;

/// One AI training service competing for slices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(bound(
    serialize = "T: Real + Serialize",
    deserialize = "T: Real + Deserialize<'de>"
))]
pub struct ModelSpec<T> {
    pub id: u32,
    pub accuracy: AccuracyModel<T>,
    /// Bits per data sample.
    pub sample_size: T,
    /// CPU cycles per sample per epoch.
    pub cycles_per_sample: T,
    /// Channel access delay in seconds.
    pub access_delay: T,
    /// Maximum end-to-end learning latency in seconds.
    pub latency_kpi: T,
    /// Maximum slice cost per step.
    pub cost_kpi: T,
    /// Samples held by the users of this service.
    pub dataset_size: T,
}

impl<T: Real> ModelSpec<T> {
    pub fn validate(&self) -> Result<(), EnvError> {
        let fields = [
            ("sample_size", self.sample_size),
            ("cycles_per_sample", self.cycles_per_sample),
            ("access_delay", self.access_delay),
            ("latency_kpi", self.latency_kpi),
            ("cost_kpi", self.cost_kpi),
            ("dataset_size", self.dataset_size),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > T::zero()) {
                return Err(EnvError::InvalidModel {
                    id: self.id,
                    reason: format!("{name} must be positive and finite"),
                });
            }
        }
        if self.latency_kpi <= self.access_delay {
            return Err(EnvError::InvalidModel {
                id: self.id,
                reason: "latency_kpi must exceed access_delay".into(),
            });
        }
        Ok(())
    }

    /// Seconds of edge compute to run `epochs` passes over the selected data.
    #[inline]
    pub fn training_delay(&self, data_fraction: T, epochs: u32, cpu_freq: T) -> T {
        T::of(f64::from(epochs)) * data_fraction * self.dataset_size * self.cycles_per_sample
            / cpu_freq
    }

    /// Seconds to upload the selected data plus the channel access delay.
    #[inline]
    pub fn comm_delay(&self, data_fraction: T, data_rate: T) -> T {
        data_fraction * self.dataset_size * self.sample_size / data_rate + self.access_delay
    }
}
