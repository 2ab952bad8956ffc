//! The slice-to-learn environment.
//!
//! Several AI training services share edge CPU and RAN bandwidth. Each step
//! the agent picks one joint action (a slice per service); the environment
//! checks the constraints, draws the data quality factors, and pays the
//! quality-weighted accuracy as utility.

mod accuracy;
mod budget;
mod constraints;
mod model;
pub mod presets;
mod quality;
mod slice;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use accuracy::{normalized_effort, AccuracyModel, MONOTONICITY_SAMPLES};
pub use budget::{budget_decrement, RwBudgetConfig};
pub use constraints::{check_feasibility, slice_cost, ConstraintSet, FeasibilityReport, Violation};
pub use model::ModelSpec;
pub use quality::{QualityMode, QualityProcess};
pub use slice::{
    ActionSpace, CatalogLayout, GridConfig, JointAction, SliceVector, DEFAULT_MAX_ACTIONS,
};

use crate::scalar::{clamp, Real};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnvError {
    #[error("invalid accuracy model: {0}")]
    InvalidAccuracyModel(String),
    #[error("invalid model {id}: {reason}")]
    InvalidModel { id: u32, reason: String },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("constraint capacities and prices must be positive")]
    InvalidConstraints,
    #[error("invalid quality process: {0}")]
    InvalidQuality(String),
    #[error("read/write budget values must be positive")]
    InvalidBudget,
    #[error("action space of {catalog}^{models} exceeds the cap of {cap}")]
    ActionSpaceTooLarge {
        catalog: usize,
        models: usize,
        cap: usize,
    },
    #[error("action index {index} out of range for {size} actions")]
    ActionOutOfRange { index: usize, size: usize },
    #[error("expected {expected} models, got {got}")]
    ModelCountMismatch { expected: usize, got: usize },
    #[error("cannot step a terminal state")]
    TerminalState,
    #[error("multi-state observations need a read/write budget")]
    ObservationNeedsBudget,
}

/// What the agent sees each step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservationMode {
    /// Constant `[1.0]`.
    Single,
    /// `[remaining_budget / initial_budget]`.
    Multi,
}

/// Everything needed to build an environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(bound(
    serialize = "T: Real + Serialize",
    deserialize = "T: Real + Deserialize<'de>"
))]
pub struct EnvConfig<T> {
    pub models: Vec<ModelSpec<T>>,
    pub grid: GridConfig<T>,
    pub constraints: ConstraintSet<T>,
    pub quality: QualityProcess<T>,
    #[serde(default)]
    pub budget: Option<RwBudgetConfig<T>>,
    pub observation: ObservationMode,
}

impl<T: Real> EnvConfig<T> {
    pub fn validate(&self) -> Result<(), EnvError> {
        if self.models.is_empty() {
            return Err(EnvError::ModelCountMismatch {
                expected: 1,
                got: 0,
            });
        }
        for m in &self.models {
            m.validate()?;
        }
        self.grid.validate()?;
        self.constraints.validate()?;
        self.quality.validate()?;
        if let Some(b) = &self.budget {
            b.validate()?;
        }
        if self.observation == ObservationMode::Multi && self.budget.is_none() {
            return Err(EnvError::ObservationNeedsBudget);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvState<T> {
    /// Steps taken since construction.
    pub t: u64,
    /// Quality factors drawn for the last step.
    pub quality: Vec<T>,
    /// Infinite when the budget is disabled.
    pub remaining_budget: T,
    pub models: Vec<ModelSpec<T>>,
    pub terminal: bool,
}

/// Result of one environment step.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StepOutcome<T> {
    /// Clock value of the executed step.
    pub t: u64,
    /// `Σ_m A_m·q_m`, reported as zero when infeasible.
    pub utility: T,
    /// `A_m` of each service for the chosen slices, before quality.
    pub per_model_accuracy: Vec<T>,
    pub quality: Vec<T>,
    pub feasible: bool,
    pub violations: Vec<Violation>,
    /// `utility / M` in `[0, 1]`, zero when infeasible.
    pub reward_exp3: T,
    /// `utility / M` when feasible, `-1` otherwise.
    pub reward_dqn: T,
    pub cost: T,
    /// Budget actually consumed by this step.
    pub budget_decrement: T,
    pub next_observation: Vec<T>,
    pub terminal: bool,
}

impl<T: Real> StepOutcome<T> {
    /// Mean accuracy delivered this step; infeasible steps deliver nothing.
    pub fn served_accuracy(&self) -> T {
        if self.feasible && !self.per_model_accuracy.is_empty() {
            self.per_model_accuracy.iter().copied().sum::<T>()
                / T::of_usize(self.per_model_accuracy.len())
        } else {
            T::zero()
        }
    }
}

/// Per-(model, catalog entry) values that do not change between steps.
#[derive(Debug, Clone)]
struct SliceTable<T> {
    accuracy: Vec<T>,
    kpi_latency_ok: Vec<bool>,
    kpi_cost_ok: Vec<bool>,
    cost: Vec<T>,
    decrement: Vec<T>,
}

/// Stateful simulator. Randomness comes from the caller's generator so a run
/// is reproducible from its seed.
#[derive(Debug, Clone)]
pub struct SlicingEnv<T> {
    config: EnvConfig<T>,
    space: ActionSpace<T>,
    table: SliceTable<T>,
    min_decrement: T,
    state: EnvState<T>,
    choices: Vec<usize>,
}

impl<T: Real> SlicingEnv<T> {
    pub fn new(config: EnvConfig<T>) -> Result<Self, EnvError> {
        config.validate()?;
        let space = ActionSpace::build(&config.grid, config.models.len())?;
        let remaining_budget = config
            .budget
            .as_ref()
            .map_or(T::infinity(), |b| b.initial_budget);
        let state = EnvState {
            t: 0,
            quality: vec![config.quality.q_high; config.models.len()],
            remaining_budget,
            models: config.models.clone(),
            terminal: false,
        };
        let table = build_table(&config, &space, &state.models);
        let per_slice_min = table.decrement.iter().copied().fold(T::infinity(), T::min);
        let min_decrement = per_slice_min * T::of_usize(config.models.len());
        let mut env = Self {
            choices: vec![0; config.models.len()],
            config,
            space,
            table,
            min_decrement,
            state,
        };
        env.refresh_terminal();
        Ok(env)
    }

    pub fn config(&self) -> &EnvConfig<T> {
        &self.config
    }

    pub fn space(&self) -> &ActionSpace<T> {
        &self.space
    }

    pub fn num_actions(&self) -> usize {
        self.space.len()
    }

    pub fn num_models(&self) -> usize {
        self.state.models.len()
    }

    pub fn state(&self) -> &EnvState<T> {
        &self.state
    }

    /// Smallest budget any joint action can consume.
    pub fn min_decrement(&self) -> T {
        self.min_decrement
    }

    pub fn observation_dim(&self) -> usize {
        1
    }

    pub fn observation(&self) -> Vec<T> {
        observation_of(
            &self.state,
            self.config.observation,
            self.config.budget.as_ref(),
        )
        .expect("observation mode validated at construction")
    }

    /// Restores the full budget for a new episode. Clock and models persist.
    pub fn start_episode(&mut self) {
        if let Some(b) = &self.config.budget {
            self.state.remaining_budget = b.initial_budget;
        }
        self.state.terminal = false;
        self.refresh_terminal();
    }

    /// Swaps in new service models. Clock, budget and agents are untouched.
    pub fn apply_drift(&mut self, new_models: Vec<ModelSpec<T>>) -> Result<(), EnvError> {
        if new_models.len() != self.state.models.len() {
            return Err(EnvError::ModelCountMismatch {
                expected: self.state.models.len(),
                got: new_models.len(),
            });
        }
        for m in &new_models {
            m.validate()?;
        }
        self.table = build_table(&self.config, &self.space, &new_models);
        self.state.models = new_models;
        Ok(())
    }

    /// Accuracy `A_m` of every service under action `index`.
    pub fn accuracies(&self, index: usize) -> Result<Vec<T>, EnvError> {
        let c = self.space.catalog().len();
        Ok(self
            .space
            .choices(index)?
            .into_iter()
            .enumerate()
            .map(|(m, k)| self.table.accuracy[m * c + k])
            .collect())
    }

    /// Constraint report for action `index` against the current models.
    pub fn feasibility(&self, index: usize) -> Result<FeasibilityReport, EnvError> {
        let action = self.space.decode(index)?;
        check_feasibility(&action.slices, &self.config.constraints, &self.state.models)
    }

    /// Budget action `index` would consume, ignoring what remains.
    pub fn decrement_of(&self, index: usize) -> Result<T, EnvError> {
        Ok(self
            .space
            .choices(index)?
            .into_iter()
            .map(|k| self.table.decrement[k])
            .sum())
    }

    pub fn step<R: Rng + ?Sized>(
        &mut self,
        action: usize,
        rng: &mut R,
    ) -> Result<StepOutcome<T>, EnvError> {
        let mut out = StepOutcome::default();
        self.step_into(action, rng, &mut out)?;
        Ok(out)
    }

    /// Like [`step`](Self::step) but reuses the buffers of `out`.
    pub fn step_into<R: Rng + ?Sized>(
        &mut self,
        action: usize,
        rng: &mut R,
        out: &mut StepOutcome<T>,
    ) -> Result<(), EnvError> {
        if self.state.terminal {
            return Err(EnvError::TerminalState);
        }
        let k = self.space.len();
        if action >= k {
            return Err(EnvError::ActionOutOfRange {
                index: action,
                size: k,
            });
        }
        let m_count = self.state.models.len();
        let c = self.space.catalog().len();
        let mut rest = action;
        for slot in self.choices.iter_mut() {
            *slot = rest % c;
            rest /= c;
        }

        self.config
            .quality
            .sample_into(self.state.t, &mut self.state.quality, rng);

        out.violations.clear();
        let catalog = self.space.catalog();
        let (mut cpu, mut rate) = (T::zero(), T::zero());
        for &ch in &self.choices {
            cpu += catalog[ch].cpu_freq;
            rate += catalog[ch].data_rate;
        }
        if cpu > self.config.constraints.edge_cpu_capacity {
            out.violations.push(Violation::EdgeCapacity);
        }
        if rate > self.config.constraints.ran_bandwidth {
            out.violations.push(Violation::RanBandwidth);
        }
        out.per_model_accuracy.clear();
        let mut cost = T::zero();
        let mut decrement = T::zero();
        let mut utility = T::zero();
        for (m, &ch) in self.choices.iter().enumerate() {
            let slot = m * c + ch;
            if !self.table.kpi_latency_ok[slot] {
                out.violations.push(Violation::Latency(m));
            }
            if !self.table.kpi_cost_ok[slot] {
                out.violations.push(Violation::Cost(m));
            }
            let acc = self.table.accuracy[slot];
            out.per_model_accuracy.push(acc);
            utility += acc * self.state.quality[m];
            cost += self.table.cost[ch];
            decrement += self.table.decrement[ch];
        }

        let mut consumed = T::zero();
        if let Some(budget) = &self.config.budget {
            let tol = budget_tolerance(budget.initial_budget);
            let remaining = self.state.remaining_budget;
            if decrement > remaining + tol {
                out.violations.push(Violation::BudgetOverdraw);
                consumed = remaining;
                self.state.remaining_budget = T::zero();
            } else if (remaining - decrement).abs() <= tol {
                consumed = remaining;
                self.state.remaining_budget = T::zero();
            } else {
                consumed = decrement;
                self.state.remaining_budget = remaining - decrement;
            }
        }

        let feasible = out.violations.is_empty();
        let m_real = T::of_usize(m_count);
        out.t = self.state.t;
        out.feasible = feasible;
        out.utility = if feasible { utility } else { T::zero() };
        out.reward_exp3 = if feasible {
            utility / m_real
        } else {
            T::zero()
        };
        out.reward_dqn = if feasible {
            utility / m_real
        } else {
            -T::one()
        };
        out.cost = cost;
        out.budget_decrement = consumed;
        out.quality.clear();
        out.quality.extend_from_slice(&self.state.quality);

        self.state.t += 1;
        self.refresh_terminal();
        out.terminal = self.state.terminal;
        out.next_observation.clear();
        out.next_observation.push(self.observation_value());
        Ok(())
    }

    fn refresh_terminal(&mut self) {
        if let Some(b) = &self.config.budget {
            let tol = budget_tolerance(b.initial_budget);
            if self.state.remaining_budget + tol < self.min_decrement {
                self.state.terminal = true;
            }
        }
    }

    fn observation_value(&self) -> T {
        match (self.config.observation, &self.config.budget) {
            (ObservationMode::Multi, Some(b)) => clamp(
                self.state.remaining_budget / b.initial_budget,
                T::zero(),
                T::one(),
            ),
            _ => T::one(),
        }
    }
}

/// Observation vector for `state` under `mode`.
pub fn observation_of<T: Real>(
    state: &EnvState<T>,
    mode: ObservationMode,
    budget: Option<&RwBudgetConfig<T>>,
) -> Result<Vec<T>, EnvError> {
    match mode {
        ObservationMode::Single => Ok(vec![T::one()]),
        ObservationMode::Multi => {
            let b = budget.ok_or(EnvError::ObservationNeedsBudget)?;
            Ok(vec![clamp(
                state.remaining_budget / b.initial_budget,
                T::zero(),
                T::one(),
            )])
        }
    }
}

/// Budget comparisons tolerate accumulated rounding of this size.
fn budget_tolerance<T: Real>(initial: T) -> T {
    initial.abs() * T::epsilon() * T::of(1024.0)
}

fn build_table<T: Real>(
    config: &EnvConfig<T>,
    space: &ActionSpace<T>,
    models: &[ModelSpec<T>],
) -> SliceTable<T> {
    let catalog = space.catalog();
    let mut table = SliceTable {
        accuracy: Vec::with_capacity(models.len() * catalog.len()),
        kpi_latency_ok: Vec::with_capacity(models.len() * catalog.len()),
        kpi_cost_ok: Vec::with_capacity(models.len() * catalog.len()),
        cost: catalog
            .iter()
            .map(|s| slice_cost(s, &config.constraints))
            .collect(),
        decrement: match &config.budget {
            Some(b) => catalog
                .iter()
                .map(|s| budget_decrement(std::slice::from_ref(s), b, config.grid.data_units_max))
                .collect(),
            None => vec![T::zero(); catalog.len()],
        },
    };
    for model in models {
        for (k, s) in catalog.iter().enumerate() {
            table.accuracy.push(model.accuracy.evaluate(
                s.data_fraction,
                s.epochs,
                config.grid.max_epochs,
            ));
            let delay = model.training_delay(s.data_fraction, s.epochs, s.cpu_freq)
                + model.comm_delay(s.data_fraction, s.data_rate);
            table.kpi_latency_ok.push(delay <= model.latency_kpi);
            table.kpi_cost_ok.push(table.cost[k] <= model.cost_kpi);
        }
    }
    table
}
