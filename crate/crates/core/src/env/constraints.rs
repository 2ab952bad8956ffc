use std::fmt;

use serde::{Deserialize, Serialize};

use super::{EnvError, ModelSpec, SliceVector};
use crate::scalar::Real;

/// Shared capacities and unit prices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintSet<T> {
    /// Total edge CPU, cycles per second.
    pub edge_cpu_capacity: T,
    /// Total RAN bandwidth, bits per second.
    pub ran_bandwidth: T,
    /// Price per cycle/second of CPU.
    pub cpu_unit_price: T,
    /// Price per bit/second of data rate.
    pub rate_unit_price: T,
}

impl<T: Real> ConstraintSet<T> {
    pub fn validate(&self) -> Result<(), EnvError> {
        let all = [
            self.edge_cpu_capacity,
            self.ran_bandwidth,
            self.cpu_unit_price,
            self.rate_unit_price,
        ];
        if all.iter().all(|v| v.is_finite() && *v > T::zero()) {
            Ok(())
        } else {
            Err(EnvError::InvalidConstraints)
        }
    }
}

/// Monetary cost of one slice: CPU and data rate at their unit prices.
#[inline]
pub fn slice_cost<T: Real>(slice: &SliceVector<T>, constraints: &ConstraintSet<T>) -> T {
    slice.cpu_freq * constraints.cpu_unit_price + slice.data_rate * constraints.rate_unit_price
}

/// A violated constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "model")]
pub enum Violation {
    EdgeCapacity,
    RanBandwidth,
    Latency(usize),
    Cost(usize),
    /// The step needed more read/write budget than remained.
    BudgetOverdraw,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EdgeCapacity => f.write_str("edge_capacity"),
            Violation::RanBandwidth => f.write_str("ran_bandwidth"),
            Violation::Latency(m) => write!(f, "latency[{m}]"),
            Violation::Cost(m) => write!(f, "cost[{m}]"),
            Violation::BudgetOverdraw => f.write_str("budget_overdraw"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FeasibilityReport {
    pub violations: Vec<Violation>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Lists every violated constraint of a joint slice assignment.
///
/// Order: edge capacity, RAN bandwidth, then per model latency and cost.
pub fn check_feasibility<T: Real>(
    slices: &[SliceVector<T>],
    constraints: &ConstraintSet<T>,
    models: &[ModelSpec<T>],
) -> Result<FeasibilityReport, EnvError> {
    if slices.len() != models.len() {
        return Err(EnvError::ModelCountMismatch {
            expected: models.len(),
            got: slices.len(),
        });
    }
    let mut violations = Vec::new();
    let cpu: T = slices.iter().map(|s| s.cpu_freq).sum();
    let rate: T = slices.iter().map(|s| s.data_rate).sum();
    if cpu > constraints.edge_cpu_capacity {
        violations.push(Violation::EdgeCapacity);
    }
    if rate > constraints.ran_bandwidth {
        violations.push(Violation::RanBandwidth);
    }
    for (m, (slice, model)) in slices.iter().zip(models).enumerate() {
        let delay = model.training_delay(slice.data_fraction, slice.epochs, slice.cpu_freq)
            + model.comm_delay(slice.data_fraction, slice.data_rate);
        if delay > model.latency_kpi {
            violations.push(Violation::Latency(m));
        }
        if slice_cost(slice, constraints) > model.cost_kpi {
            violations.push(Violation::Cost(m));
        }
    }
    Ok(FeasibilityReport { violations })
}
