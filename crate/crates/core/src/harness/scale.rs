//! Named run sizes. `Full` keeps the full episode counts and
//! hyperparameters; `Desk` shrinks them so every experiment finishes in
//! minutes on a single core.

use serde::{Deserialize, Serialize};

use super::experiments::{
    AdversaryConfig, AgentSettings, Attacker, BudgetConfig, ConvergenceConfig, ConvergenceRule,
    PerAgent, TimingConfig,
};
use crate::dqn::DqnConfig;
use crate::env::presets::{DriftCase, SpacePreset};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Desk,
    Full,
}

impl Scale {
    pub fn name(self) -> &'static str {
        match self {
            Self::Desk => "desk",
            Self::Full => "full",
        }
    }
}

/// Default sizes for every experiment at one scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleDefaults {
    pub settings: AgentSettings,
    pub rule: ConvergenceRule,
    pub seeds: usize,
    pub convergence_episodes: PerAgent<usize>,
    pub drift_episode: PerAgent<usize>,
    pub adversary_episodes: PerAgent<usize>,
    pub budget_episodes: PerAgent<usize>,
    pub eval_episodes: usize,
    pub budget_eval_episodes: usize,
    pub budget_dqn_discount: f64,
    pub timing_steps: usize,
    pub timing_batches: Vec<usize>,
}

impl ScaleDefaults {
    pub fn for_scale(scale: Scale) -> Self {
        match scale {
            Scale::Full => Self::full(),
            Scale::Desk => Self::desk(),
        }
    }

    pub fn full() -> Self {
        Self {
            settings: AgentSettings {
                exp3_gamma: 0.001,
                dqn: DqnConfig::default(),
                steps_per_episode: PerAgent {
                    exp3: 10_000,
                    dqn: 500,
                },
            },
            rule: ConvergenceRule::default(),
            seeds: 3,
            convergence_episodes: PerAgent {
                exp3: 2000,
                dqn: 2000,
            },
            drift_episode: PerAgent {
                exp3: 1000,
                dqn: 1000,
            },
            adversary_episodes: PerAgent {
                exp3: 500,
                dqn: 500,
            },
            budget_episodes: PerAgent {
                exp3: 500,
                dqn: 500,
            },
            eval_episodes: 10,
            budget_eval_episodes: 10,
            budget_dqn_discount: 0.92,
            timing_steps: 10_000,
            timing_batches: vec![512, 1024, 2048],
        }
    }

    pub fn desk() -> Self {
        Self {
            settings: AgentSettings {
                exp3_gamma: 0.1,
                dqn: DqnConfig::default(),
                steps_per_episode: PerAgent {
                    exp3: 10_000,
                    dqn: 500,
                },
            },
            rule: ConvergenceRule::default(),
            seeds: 3,
            // DQN needs ~300 episodes for ε to reach its floor.
            convergence_episodes: PerAgent {
                exp3: 1000,
                dqn: 450,
            },
            drift_episode: PerAgent {
                exp3: 500,
                dqn: 350,
            },
            adversary_episodes: PerAgent {
                exp3: 500,
                dqn: 300,
            },
            // Multi-state batches need one hidden pass per distinct budget
            // level, which makes these the slowest DQN steps.
            budget_episodes: PerAgent { exp3: 500, dqn: 80 },
            eval_episodes: 5,
            budget_eval_episodes: 20,
            budget_dqn_discount: 0.92,
            timing_steps: 10_000,
            timing_batches: vec![512, 1024, 2048],
        }
    }

    pub fn convergence(&self, case: DriftCase) -> ConvergenceConfig {
        ConvergenceConfig {
            case,
            space: SpacePreset::Small,
            episodes: self.convergence_episodes,
            drift_episode: PerAgent {
                exp3: Some(self.drift_episode.exp3),
                dqn: Some(self.drift_episode.dqn),
            },
            eval_episodes: self.eval_episodes,
        }
    }

    pub fn adversary(&self, space: SpacePreset, attacker: Attacker) -> AdversaryConfig {
        AdversaryConfig {
            space,
            attacker,
            episodes: self.adversary_episodes,
            eval_episodes: self.eval_episodes,
        }
    }

    pub fn budget(&self, budget: f64) -> BudgetConfig {
        BudgetConfig {
            budget,
            episodes: self.budget_episodes,
            eval_episodes: self.budget_eval_episodes,
            dqn_discount: self.budget_dqn_discount,
        }
    }

    pub fn timing(&self) -> TimingConfig {
        TimingConfig {
            space: SpacePreset::Small,
            batch_sizes: self.timing_batches.clone(),
            steps: self.timing_steps,
        }
    }
}
