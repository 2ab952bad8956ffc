//! Common driving interface for both agents and the episode loop.

use std::time::Instant;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::dqn::{DqnAgent, DqnConfig};
use crate::env::{SlicingEnv, StepOutcome, Violation};
use crate::exp3::Exp3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentKind {
    Exp3,
    Dqn,
}

impl AgentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Exp3 => "exp3",
            Self::Dqn => "dqn",
        }
    }

    /// Stable stream id for seed derivation.
    pub fn stream(self) -> u64 {
        match self {
            Self::Exp3 => 1,
            Self::Dqn => 2,
        }
    }
}

impl std::fmt::Display for AgentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// An agent as seen by the experiment loop.
pub trait Learner {
    fn kind(&self) -> AgentKind;
    /// Behaviour policy used while training.
    fn act(&mut self, obs: &[f64], rng: &mut ChaCha8Rng) -> Result<usize, HarnessError>;
    /// Feeds back the outcome of the action returned by the last `act`.
    /// Returns a training loss when the agent has one.
    fn learn(
        &mut self,
        obs: &[f64],
        action: usize,
        outcome: &StepOutcome<f64>,
        rng: &mut ChaCha8Rng,
    ) -> Result<Option<f64>, HarnessError>;
    fn end_episode(&mut self);
    /// Frozen policy used for evaluation; never changes the agent.
    fn eval_act(&mut self, obs: &[f64], rng: &mut ChaCha8Rng) -> Result<usize, HarnessError>;
    /// ε for DQN, policy entropy (nats) for EXP3.
    fn exploration(&self) -> f64;
}

pub struct Exp3Learner {
    agent: Exp3<f64>,
}

impl Exp3Learner {
    pub fn new(actions: usize, gamma: f64) -> Result<Self, HarnessError> {
        Ok(Self {
            agent: Exp3::new(actions, gamma)?,
        })
    }

    pub fn agent(&self) -> &Exp3<f64> {
        &self.agent
    }
}

impl Learner for Exp3Learner {
    fn kind(&self) -> AgentKind {
        AgentKind::Exp3
    }

    fn act(&mut self, _obs: &[f64], rng: &mut ChaCha8Rng) -> Result<usize, HarnessError> {
        Ok(self.agent.select(rng))
    }

    fn learn(
        &mut self,
        _obs: &[f64],
        action: usize,
        outcome: &StepOutcome<f64>,
        _rng: &mut ChaCha8Rng,
    ) -> Result<Option<f64>, HarnessError> {
        self.agent.update(action, outcome.reward_exp3)?;
        Ok(None)
    }

    fn end_episode(&mut self) {}

    fn eval_act(&mut self, _obs: &[f64], rng: &mut ChaCha8Rng) -> Result<usize, HarnessError> {
        Ok(self.agent.sample_exploit(rng))
    }

    fn exploration(&self) -> f64 {
        self.agent.entropy()
    }
}

pub struct DqnLearner {
    agent: DqnAgent<f64>,
}

impl DqnLearner {
    pub fn new(
        config: DqnConfig<f64>,
        obs_dim: usize,
        actions: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self, HarnessError> {
        Ok(Self {
            agent: DqnAgent::new(config, obs_dim, actions, rng)?,
        })
    }

    pub fn agent(&self) -> &DqnAgent<f64> {
        &self.agent
    }
}

impl Learner for DqnLearner {
    fn kind(&self) -> AgentKind {
        AgentKind::Dqn
    }

    fn act(&mut self, obs: &[f64], rng: &mut ChaCha8Rng) -> Result<usize, HarnessError> {
        Ok(self.agent.act(obs, rng)?)
    }

    fn learn(
        &mut self,
        obs: &[f64],
        action: usize,
        outcome: &StepOutcome<f64>,
        rng: &mut ChaCha8Rng,
    ) -> Result<Option<f64>, HarnessError> {
        Ok(self.agent.observe(
            obs,
            action,
            outcome.reward_dqn,
            &outcome.next_observation,
            outcome.terminal,
            rng,
        )?)
    }

    fn end_episode(&mut self) {
        self.agent.decay_epsilon();
    }

    fn eval_act(&mut self, obs: &[f64], _rng: &mut ChaCha8Rng) -> Result<usize, HarnessError> {
        Ok(self.agent.greedy(obs)?)
    }

    fn exploration(&self) -> f64 {
        self.agent.epsilon()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Train,
    Eval,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Self::Train => "train",
            Self::Eval => "eval",
        }
    }
}

/// How long an episode lasts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpisodeLength {
    /// Exactly this many steps; an exhausted budget is refilled in between.
    Steps(usize),
    /// Until the budget runs out.
    UntilTerminal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub phase: Phase,
    pub episode: usize,
    pub agent: AgentKind,
    pub steps: usize,
    /// Steps rejected because they would overdraw the budget.
    pub overdraws: usize,
    pub mean_utility: f64,
    /// Mean served accuracy; infeasible steps count as zero.
    pub mean_accuracy: f64,
    pub mean_cost: f64,
    pub feasible_rate: f64,
    pub exploration: f64,
    pub mean_loss: Option<f64>,
    pub remaining_budget: Option<f64>,
    pub wall_ms: u64,
}

impl EpisodeRecord {
    /// Steps completed before the budget ran out.
    pub fn budget_steps(&self) -> usize {
        self.steps - self.overdraws
    }
}

/// Runs one episode; `phase` decides between learning and frozen play.
pub fn run_episode(
    env: &mut SlicingEnv<f64>,
    learner: &mut dyn Learner,
    length: EpisodeLength,
    phase: Phase,
    episode: usize,
    rng: &mut ChaCha8Rng,
) -> Result<EpisodeRecord, HarnessError> {
    let started = Instant::now();
    env.start_episode();
    let max_steps = match length {
        EpisodeLength::Steps(n) => n,
        EpisodeLength::UntilTerminal => usize::MAX,
    };
    if max_steps == 0 {
        return Err(HarnessError::EmptyEpisode);
    }
    let mut out = StepOutcome::default();
    let mut obs = env.observation();
    let (mut steps, mut overdraws, mut feasible) = (0usize, 0usize, 0usize);
    let (mut utility, mut accuracy, mut cost) = (0.0, 0.0, 0.0);
    let (mut loss_sum, mut loss_n) = (0.0, 0usize);
    while steps < max_steps {
        if env.state().terminal {
            match length {
                EpisodeLength::UntilTerminal => break,
                EpisodeLength::Steps(_) => {
                    env.start_episode();
                    obs = env.observation();
                }
            }
        }
        let action = match phase {
            Phase::Train => learner.act(&obs, rng)?,
            Phase::Eval => learner.eval_act(&obs, rng)?,
        };
        env.step_into(action, rng, &mut out)?;
        if phase == Phase::Train {
            if let Some(l) = learner.learn(&obs, action, &out, rng)? {
                loss_sum += l;
                loss_n += 1;
            }
        }
        steps += 1;
        overdraws += usize::from(out.violations.contains(&Violation::BudgetOverdraw));
        feasible += usize::from(out.feasible);
        utility += out.utility;
        accuracy += out.served_accuracy();
        cost += out.cost;
        obs.clear();
        obs.extend_from_slice(&out.next_observation);
    }
    if phase == Phase::Train {
        learner.end_episode();
    }
    let n = steps.max(1) as f64;
    let remaining = env.state().remaining_budget;
    Ok(EpisodeRecord {
        phase,
        episode,
        agent: learner.kind(),
        steps,
        overdraws,
        mean_utility: utility / n,
        mean_accuracy: accuracy / n,
        mean_cost: cost / n,
        feasible_rate: feasible as f64 / n,
        exploration: learner.exploration(),
        mean_loss: (loss_n > 0).then(|| loss_sum / loss_n as f64),
        remaining_budget: remaining.is_finite().then_some(remaining),
        wall_ms: u64::try_from(started.elapsed().as_millis()).unwrap_or(u64::MAX),
    })
}
