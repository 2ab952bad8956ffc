use serde::{Deserialize, Serialize};

use super::EnvError;
use crate::scalar::Real;

/// Default hard cap on the joint action count.
pub const DEFAULT_MAX_ACTIONS: usize = 1_000_000;

/// Resources and hyperparameters allocated to one service for one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SliceVector<T> {
    /// Fraction of the user dataset gathered, in `(0, 1]`.
    pub data_fraction: T,
    pub epochs: u32,
    /// Edge CPU frequency, cycles per second.
    pub cpu_freq: T,
    /// Uplink data rate, bits per second.
    pub data_rate: T,
}

/// How per-dimension grids combine into a per-model catalog.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CatalogLayout {
    /// Full product of the four grids, data fraction slowest and data rate
    /// fastest.
    Product,
    /// Workload levels `zip(data_fractions, epochs)` crossed with resource
    /// tiers `zip(cpu_freqs, data_rates)`, tier-major.
    Paired,
}

/// Discrete grids from which slice vectors are drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(bound(
    serialize = "T: Real + Serialize",
    deserialize = "T: Real + Deserialize<'de>"
))]
pub struct GridConfig<T> {
    pub data_fractions: Vec<T>,
    pub epochs: Vec<u32>,
    pub cpu_freqs: Vec<T>,
    pub data_rates: Vec<T>,
    pub layout: CatalogLayout,
    /// Keep only the first `catalog_size` vectors of the per-model catalog.
    #[serde(default)]
    pub catalog_size: Option<usize>,
    /// Epoch count that maps to full effort.
    pub max_epochs: u32,
    /// Data units written when a service takes its whole dataset.
    pub data_units_max: T,
    #[serde(default = "default_max_actions")]
    pub max_actions: usize,
}

fn default_max_actions() -> usize {
    DEFAULT_MAX_ACTIONS
}

impl<T: Real> GridConfig<T> {
    pub fn validate(&self) -> Result<(), EnvError> {
        let bad = |reason: &str| Err(EnvError::InvalidGrid(reason.to_string()));
        if self.data_fractions.is_empty()
            || self.epochs.is_empty()
            || self.cpu_freqs.is_empty()
            || self.data_rates.is_empty()
        {
            return bad("every grid dimension needs at least one level");
        }
        if self.max_epochs == 0 {
            return bad("max_epochs must be positive");
        }
        if self
            .data_fractions
            .iter()
            .any(|&f| !(f > T::zero() && f <= T::one()))
        {
            return bad("data fractions must lie in (0, 1]");
        }
        if self.epochs.iter().any(|&e| e == 0 || e > self.max_epochs) {
            return bad("epochs must lie in [1, max_epochs]");
        }
        if self
            .cpu_freqs
            .iter()
            .chain(self.data_rates.iter())
            .any(|&v| !(v.is_finite() && v > T::zero()))
        {
            return bad("cpu frequencies and data rates must be positive");
        }
        if !(self.data_units_max.is_finite() && self.data_units_max > T::zero()) {
            return bad("data_units_max must be positive");
        }
        if self.layout == CatalogLayout::Paired
            && (self.data_fractions.len() != self.epochs.len()
                || self.cpu_freqs.len() != self.data_rates.len())
        {
            return bad("paired layout needs equal-length fraction/epoch and cpu/rate grids");
        }
        if self.catalog_size == Some(0) {
            return bad("catalog_size must be positive");
        }
        Ok(())
    }

    /// Per-model catalog in grid order, truncated to `catalog_size`.
    pub fn catalog(&self) -> Vec<SliceVector<T>> {
        let mut out = Vec::new();
        match self.layout {
            CatalogLayout::Product => {
                for &data_fraction in &self.data_fractions {
                    for &epochs in &self.epochs {
                        for &cpu_freq in &self.cpu_freqs {
                            for &data_rate in &self.data_rates {
                                out.push(SliceVector {
                                    data_fraction,
                                    epochs,
                                    cpu_freq,
                                    data_rate,
                                });
                            }
                        }
                    }
                }
            }
            CatalogLayout::Paired => {
                for (&cpu_freq, &data_rate) in self.cpu_freqs.iter().zip(&self.data_rates) {
                    for (&data_fraction, &epochs) in self.data_fractions.iter().zip(&self.epochs) {
                        out.push(SliceVector {
                            data_fraction,
                            epochs,
                            cpu_freq,
                            data_rate,
                        });
                    }
                }
            }
        }
        if let Some(c) = self.catalog_size {
            out.truncate(c);
        }
        out
    }
}

/// A decoded joint action: one slice per service.
#[derive(Debug, Clone, PartialEq)]
pub struct JointAction<T> {
    pub index: usize,
    pub slices: Vec<SliceVector<T>>,
}

/// Bijection between action indices and joint actions.
///
/// Index digits are catalog positions in mixed radix, model 0 least
/// significant.
#[derive(Debug, Clone)]
pub struct ActionSpace<T> {
    catalog: Vec<SliceVector<T>>,
    models: usize,
    size: usize,
}

impl<T: Real> ActionSpace<T> {
    pub fn build(grid: &GridConfig<T>, models: usize) -> Result<Self, EnvError> {
        grid.validate()?;
        if models == 0 {
            return Err(EnvError::InvalidGrid(
                "at least one model is required".into(),
            ));
        }
        let catalog = grid.catalog();
        let size = u32::try_from(models)
            .ok()
            .and_then(|m| catalog.len().checked_pow(m))
            .filter(|&k| k <= grid.max_actions)
            .ok_or(EnvError::ActionSpaceTooLarge {
                catalog: catalog.len(),
                models,
                cap: grid.max_actions,
            })?;
        Ok(Self {
            catalog,
            models,
            size,
        })
    }

    /// Number of joint actions `K`.
    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    pub fn models(&self) -> usize {
        self.models
    }

    pub fn catalog(&self) -> &[SliceVector<T>] {
        &self.catalog
    }

    /// Catalog position chosen for each model.
    pub fn choices(&self, index: usize) -> Result<Vec<usize>, EnvError> {
        if index >= self.size {
            return Err(EnvError::ActionOutOfRange {
                index,
                size: self.size,
            });
        }
        let c = self.catalog.len();
        let mut rest = index;
        Ok((0..self.models)
            .map(|_| {
                let digit = rest % c;
                rest /= c;
                digit
            })
            .collect())
    }

    pub fn decode(&self, index: usize) -> Result<JointAction<T>, EnvError> {
        let slices = self
            .choices(index)?
            .into_iter()
            .map(|c| self.catalog[c])
            .collect();
        Ok(JointAction { index, slices })
    }

    /// Index of the joint action made of `slices`, if every slice is in the
    /// catalog.
    pub fn encode(&self, slices: &[SliceVector<T>]) -> Option<usize> {
        if slices.len() != self.models {
            return None;
        }
        let c = self.catalog.len();
        let mut index = 0usize;
        for slice in slices.iter().rev() {
            let digit = self.catalog.iter().position(|s| s == slice)?;
            index = index * c + digit;
        }
        Some(index)
    }
}
