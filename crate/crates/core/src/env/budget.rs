use serde::{Deserialize, Serialize};

use super::{EnvError, SliceVector};
use crate::scalar::Real;

/// Shared read/write allowance of the storage tier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RwBudgetConfig<T> {
    pub initial_budget: T,
    /// Charged per training epoch.
    pub read_cost: T,
    /// Charged per data unit written.
    pub write_cost: T,
}

impl<T: Real> RwBudgetConfig<T> {
    pub fn new(initial_budget: T) -> Self {
        Self {
            initial_budget,
            read_cost: T::of(0.2),
            write_cost: T::of(0.5),
        }
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        let ok = [self.initial_budget, self.read_cost, self.write_cost]
            .iter()
            .all(|v| v.is_finite() && *v > T::zero());
        if ok {
            Ok(())
        } else {
            Err(EnvError::InvalidBudget)
        }
    }
}

/// Budget consumed by one joint action:
/// `Σ_m read_cost·epochs_m + write_cost·data_fraction_m·data_units_max`.
pub fn budget_decrement<T: Real>(
    slices: &[SliceVector<T>],
    cfg: &RwBudgetConfig<T>,
    data_units_max: T,
) -> T {
    slices
        .iter()
        .map(|s| {
            cfg.read_cost * T::of(f64::from(s.epochs))
                + cfg.write_cost * s.data_fraction * data_units_max
        })
        .sum()
}
