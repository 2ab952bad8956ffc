//! Named environment presets.
//!
//! Three CNN-LSTM-like services with distinct learning curves and KPIs, a
//! small (4096 actions) and a big (17 576 actions) slice catalog, and two
//! drift sets: `Close` perturbs every coefficient by at most 10 %, `Distinct`
//! by 50 % and moves the optimal allocation.

use serde::{Deserialize, Serialize};

use super::{
    AccuracyModel, CatalogLayout, ConstraintSet, EnvConfig, GridConfig, ModelSpec, ObservationMode,
    QualityProcess, RwBudgetConfig, DEFAULT_MAX_ACTIONS,
};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpacePreset {
    Small,
    Big,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftCase {
    /// Same models again.
    Identity,
    Close,
    Distinct,
}

const AMPLITUDES: [[f64; 3]; 3] = [
    [0.97, -0.55, -0.35],
    [0.95, -0.60, -0.25],
    [0.98, -0.45, -0.40],
];
const RATES: [[f64; 3]; 3] = [[0.0, -6.0, -12.0], [0.0, -4.0, -9.0], [0.0, -3.0, -8.0]];

// (amplitude factors, rate factors) per model.
const CLOSE_FACTORS: [([f64; 3], [f64; 3]); 3] = [
    ([1.02, 0.9, 1.1], [1.0, 1.1, 0.9]),
    ([0.98, 1.1, 0.9], [1.0, 0.9, 1.1]),
    ([1.0, 0.9, 1.1], [1.0, 1.1, 0.9]),
];
const DISTINCT_FACTORS: [([f64; 3], [f64; 3]); 3] = [
    ([0.98, 1.5, 0.5], [1.0, 0.5, 1.5]),
    ([1.02, 0.5, 1.5], [1.0, 0.5, 0.5]),
    ([0.98, 1.5, 0.5], [1.0, 1.5, 1.5]),
];

// (dataset_size, sample_size bits, cycles/sample, access delay s, latency KPI s, cost KPI)
const SERVICES: [(f64, f64, f64, f64, f64, f64); 3] = [
    (10_000.0, 8_000.0, 5e5, 0.05, 14.0, 1.4),
    (12_000.0, 6_000.0, 4e5, 0.08, 16.0, 1.3),
    (8_000.0, 10_000.0, 6e5, 0.06, 18.0, 1.6),
];

fn arr<T: Real>(v: [f64; 3]) -> [T; 3] {
    v.map(T::of)
}

fn service<T: Real>(idx: usize, amplitudes: [f64; 3], rates: [f64; 3]) -> ModelSpec<T> {
    let (dataset, sample, cycles, access, latency, cost) = SERVICES[idx];
    ModelSpec {
        id: idx as u32,
        accuracy: AccuracyModel::new(arr(amplitudes), arr(rates))
            .expect("preset accuracy curves are monotone"),
        sample_size: T::of(sample),
        cycles_per_sample: T::of(cycles),
        access_delay: T::of(access),
        latency_kpi: T::of(latency),
        cost_kpi: T::of(cost),
        dataset_size: T::of(dataset),
    }
}

/// The three services agents train on first.
pub fn initial_models<T: Real>() -> Vec<ModelSpec<T>> {
    (0..3)
        .map(|i| service(i, AMPLITUDES[i], RATES[i]))
        .collect()
}

/// The services swapped in at the drift point.
pub fn drift_models<T: Real>(case: DriftCase) -> Vec<ModelSpec<T>> {
    let factors = match case {
        DriftCase::Identity => return initial_models(),
        DriftCase::Close => &CLOSE_FACTORS,
        DriftCase::Distinct => &DISTINCT_FACTORS,
    };
    (0..3)
        .map(|i| {
            let (fa, fb) = factors[i];
            let a = std::array::from_fn(|j| AMPLITUDES[i][j] * fa[j]);
            let b = std::array::from_fn(|j| RATES[i][j] * fb[j]);
            service(i, a, b)
        })
        .collect()
}

pub fn constraints<T: Real>() -> ConstraintSet<T> {
    ConstraintSet {
        edge_cpu_capacity: T::of(22e9),
        ran_bandwidth: T::of(160e6),
        cpu_unit_price: T::of(1e-10),
        rate_unit_price: T::of(1e-8),
    }
}

pub fn grid<T: Real>(space: SpacePreset) -> GridConfig<T> {
    match space {
        SpacePreset::Small => GridConfig {
            data_fractions: [0.25, 0.5, 0.75, 1.0].map(T::of).to_vec(),
            epochs: vec![5, 10, 15, 20],
            cpu_freqs: [2.5e9, 5e9, 7.5e9, 10e9].map(T::of).to_vec(),
            data_rates: [10e6, 20e6, 40e6, 80e6].map(T::of).to_vec(),
            layout: CatalogLayout::Paired,
            catalog_size: None,
            max_epochs: 20,
            data_units_max: T::of(8.0),
            max_actions: DEFAULT_MAX_ACTIONS,
        },
        SpacePreset::Big => GridConfig {
            data_fractions: [0.4, 0.55, 0.7, 0.85, 1.0].map(T::of).to_vec(),
            epochs: vec![4, 8, 12, 16, 20],
            cpu_freqs: [2e9, 4e9, 6e9, 8e9, 10e9, 12e9].map(T::of).to_vec(),
            data_rates: [10e6, 20e6, 30e6, 50e6, 70e6, 90e6].map(T::of).to_vec(),
            layout: CatalogLayout::Paired,
            catalog_size: Some(26),
            max_epochs: 20,
            data_units_max: T::of(8.0),
            max_actions: DEFAULT_MAX_ACTIONS,
        },
    }
}

/// Benign quality noise: `q ~ U[0.8, 1.0]`.
pub fn stationary_quality<T: Real>() -> QualityProcess<T> {
    QualityProcess::stationary(T::of(0.8), T::of(1.0))
}

/// Attacker toggling between 1.0 and 0.5; period 3 is infrequent, 2 frequent.
pub fn adversary_quality<T: Real>(period: u32) -> QualityProcess<T> {
    QualityProcess::adversary(T::of(0.5), T::of(1.0), period)
}

/// Single-state environment without a read/write budget.
pub fn env_config<T: Real>(space: SpacePreset, quality: QualityProcess<T>) -> EnvConfig<T> {
    EnvConfig {
        models: initial_models(),
        grid: grid(space),
        constraints: constraints(),
        quality,
        budget: None,
        observation: ObservationMode::Single,
    }
}

/// Multi-state environment whose episodes end when the budget runs out.
pub fn budget_env_config<T: Real>(initial_budget: f64) -> EnvConfig<T> {
    EnvConfig {
        budget: Some(RwBudgetConfig::new(T::of(initial_budget))),
        observation: ObservationMode::Multi,
        ..env_config(SpacePreset::Small, stationary_quality())
    }
}
