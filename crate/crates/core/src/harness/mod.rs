//! Experiment harness: drives agents through the simulator, detects
//! convergence, computes advantages and summarises runs. Performs no I/O.

mod experiments;
mod learner;
mod metrics;
mod oracle;
mod scale;

use thiserror::Error;

pub use experiments::{
    attacker_name, case_name, run_adversary, run_budget, run_cell, run_convergence, run_timing,
    space_name, AdvantagePair, AdversaryConfig, AgentSettings, AgentSummary, Attacker,
    BudgetConfig, CellPlan, CellResult, ConvergenceConfig, ConvergenceRule, Drift, EvalStats,
    ExperimentReport, ExperimentSummary, PerAgent, TimingConfig, TimingReport, TimingRow,
    REFERENCE_STEP_RATIO,
};
pub use learner::{
    run_episode, AgentKind, DqnLearner, EpisodeLength, EpisodeRecord, Exp3Learner, Learner, Phase,
};
pub use metrics::{
    compute_advantage, derive_seed, detect_convergence, median, reciprocal_advantage, splitmix64,
    MetricError,
};
pub use oracle::{best_expected_utility, expected_utilities};
pub use scale::{Scale, ScaleDefaults};

use crate::dqn::DqnError;
use crate::env::EnvError;
use crate::exp3::Exp3Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Exp3(#[from] Exp3Error),
    #[error(transparent)]
    Dqn(#[from] DqnError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("invalid experiment configuration: {0}")]
    InvalidConfig(String),
    #[error("episodes need at least one step")]
    EmptyEpisode,
}
