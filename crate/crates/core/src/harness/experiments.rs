//! The four experiment families: convergence under drift, adversarial
//! quality, read/write budgets and per-step timing.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::learner::{
    run_episode, AgentKind, DqnLearner, EpisodeLength, EpisodeRecord, Exp3Learner, Learner, Phase,
};
use super::metrics::{compute_advantage, derive_seed, detect_convergence, median};
use super::oracle::best_expected_utility;
use super::HarnessError;
use crate::dqn::DqnConfig;
use crate::env::presets::{
    adversary_quality, budget_env_config, drift_models, env_config, stationary_quality, DriftCase,
    SpacePreset,
};
use crate::env::{EnvConfig, ModelSpec, QualityProcess, SlicingEnv, StepOutcome};

/// A value per agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerAgent<T> {
    pub exp3: T,
    pub dqn: T,
}

impl<T: Copy> PerAgent<T> {
    pub fn get(&self, agent: AgentKind) -> T {
        match agent {
            AgentKind::Exp3 => self.exp3,
            AgentKind::Dqn => self.dqn,
        }
    }
}

/// Agent hyperparameters shared by every experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSettings {
    pub exp3_gamma: f64,
    pub dqn: DqnConfig<f64>,
    /// Environment steps per training episode; fixes the step equivalence
    /// between the two agents.
    pub steps_per_episode: PerAgent<usize>,
}

impl AgentSettings {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if !(self.exp3_gamma > 0.0 && self.exp3_gamma <= 1.0) {
            return Err(HarnessError::InvalidConfig(
                "exp3_gamma must lie in (0, 1]".into(),
            ));
        }
        self.dqn.validate()?;
        if self.steps_per_episode.exp3 == 0 || self.steps_per_episode.dqn == 0 {
            return Err(HarnessError::InvalidConfig(
                "steps_per_episode must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Moving-window flattening rule applied to per-episode mean utility.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceRule {
    pub window: usize,
    pub tolerance: f64,
}

impl Default for ConvergenceRule {
    fn default() -> Self {
        Self {
            window: 20,
            tolerance: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceConfig {
    pub case: DriftCase,
    pub space: SpacePreset,
    pub episodes: PerAgent<usize>,
    /// Episode at which the drifted models are swapped in; `None` (written
    /// as `"none"`) disables drift.
    #[serde(with = "drift_repr")]
    pub drift_episode: PerAgent<Option<usize>>,
    pub eval_episodes: usize,
}

// Serialized as an episode number or the string "none", so a disabled
// drift survives formats that omit absent keys.
mod drift_repr {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use super::PerAgent;

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        At(usize),
        Off(String),
    }

    fn to_repr(v: Option<usize>) -> Repr {
        v.map_or_else(|| Repr::Off("none".into()), Repr::At)
    }

    fn from_repr<E: serde::de::Error>(r: Repr) -> Result<Option<usize>, E> {
        match r {
            Repr::At(e) => Ok(Some(e)),
            Repr::Off(s) if s == "none" => Ok(None),
            Repr::Off(s) => Err(E::custom(format!(
                "expected an episode or \"none\", got \"{s}\""
            ))),
        }
    }

    pub fn serialize<S: Serializer>(v: &PerAgent<Option<usize>>, s: S) -> Result<S::Ok, S::Error> {
        PerAgent {
            exp3: to_repr(v.exp3),
            dqn: to_repr(v.dqn),
        }
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> Result<PerAgent<Option<usize>>, D::Error> {
        let r = PerAgent::<Repr>::deserialize(d)?;
        Ok(PerAgent {
            exp3: from_repr(r.exp3)?,
            dqn: from_repr(r.dqn)?,
        })
    }
}

impl ConvergenceConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        check_episodes(&self.episodes)?;
        for agent in [AgentKind::Exp3, AgentKind::Dqn] {
            if let Some(d) = self.drift_episode.get(agent) {
                if d >= self.episodes.get(agent) {
                    return Err(HarnessError::InvalidConfig(format!(
                        "{agent} drift episode {d} must come before the last of {} episodes",
                        self.episodes.get(agent)
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Attacker {
    None,
    Low,
    High,
}

impl Attacker {
    /// Steps between quality flips; `None` when there is no attacker.
    pub fn period(self) -> Option<u32> {
        match self {
            Self::None => None,
            Self::Low => Some(3),
            Self::High => Some(2),
        }
    }

    pub fn quality(self) -> QualityProcess<f64> {
        self.period()
            .map_or_else(stationary_quality, adversary_quality)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdversaryConfig {
    pub space: SpacePreset,
    pub attacker: Attacker,
    pub episodes: PerAgent<usize>,
    pub eval_episodes: usize,
}

impl AdversaryConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        check_episodes(&self.episodes)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetConfig {
    pub budget: f64,
    /// Training episodes of `steps_per_episode` steps; the budget refills
    /// whenever it runs out inside one.
    pub episodes: PerAgent<usize>,
    /// Evaluation episodes, each lasting until the budget is exhausted.
    pub eval_episodes: usize,
    /// DQN discount used in the budgeted, multi-state environment.
    pub dqn_discount: f64,
}

impl BudgetConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if !(self.budget > 0.0 && self.budget.is_finite()) {
            return Err(HarnessError::InvalidConfig(
                "budget must be positive".into(),
            ));
        }
        if !(self.dqn_discount > 0.0 && self.dqn_discount < 1.0) {
            return Err(HarnessError::InvalidConfig(
                "dqn_discount must lie in (0, 1)".into(),
            ));
        }
        check_episodes(&self.episodes)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimingConfig {
    pub space: SpacePreset,
    pub batch_sizes: Vec<usize>,
    /// Timed steps per measurement.
    pub steps: usize,
}

impl TimingConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.steps == 0 || self.batch_sizes.is_empty() || self.batch_sizes.contains(&0) {
            return Err(HarnessError::InvalidConfig(
                "timing needs positive steps and batch sizes".into(),
            ));
        }
        Ok(())
    }
}

fn check_episodes(episodes: &PerAgent<usize>) -> Result<(), HarnessError> {
    if episodes.exp3 == 0 || episodes.dqn == 0 {
        return Err(HarnessError::InvalidConfig(
            "episode counts must be positive".into(),
        ));
    }
    Ok(())
}

/// Model swap applied before a given training episode.
#[derive(Debug, Clone)]
pub struct Drift {
    pub episode: usize,
    pub models: Vec<ModelSpec<f64>>,
}

/// One agent × environment × seed run.
#[derive(Debug, Clone)]
pub struct CellPlan {
    pub agent: AgentKind,
    pub env: EnvConfig<f64>,
    pub dqn: DqnConfig<f64>,
    pub exp3_gamma: f64,
    pub drift: Option<Drift>,
    pub train_episodes: usize,
    pub steps_per_episode: usize,
    pub eval_episodes: usize,
    pub eval_length: EpisodeLength,
    pub rule: ConvergenceRule,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalStats {
    pub mean_utility: f64,
    pub mean_accuracy: f64,
    pub mean_steps: f64,
    /// Mean steps completed before the budget ran out.
    pub mean_budget_steps: f64,
}

#[derive(Debug, Clone)]
pub struct CellResult {
    pub agent: AgentKind,
    pub seed_index: usize,
    pub seed: u64,
    pub steps_per_episode: usize,
    pub train_episodes: usize,
    pub records: Vec<EpisodeRecord>,
    /// Episode (from the start) at which training settled.
    pub convergence: Option<usize>,
    /// Episodes after the drift until training settled again.
    pub post_drift_convergence: Option<usize>,
    /// Mean training utility from the convergence episode until the drift
    /// (or the end).
    pub post_convergence_utility: Option<f64>,
    pub eval: EvalStats,
    pub total_steps: u64,
    pub wall_ms: u64,
}

fn build_learner(
    plan: &CellPlan,
    env: &SlicingEnv<f64>,
    rng: &mut ChaCha8Rng,
) -> Result<Box<dyn Learner>, HarnessError> {
    Ok(match plan.agent {
        AgentKind::Exp3 => Box::new(Exp3Learner::new(env.num_actions(), plan.exp3_gamma)?),
        AgentKind::Dqn => Box::new(DqnLearner::new(
            plan.dqn.clone(),
            env.observation_dim(),
            env.num_actions(),
            rng,
        )?),
    })
}

/// Trains, evaluates and summarises one cell.
pub fn run_cell(plan: &CellPlan, seed_index: usize) -> Result<CellResult, HarnessError> {
    let started = Instant::now();
    if let Some(d) = &plan.drift {
        if d.episode >= plan.train_episodes {
            return Err(HarnessError::InvalidConfig(format!(
                "drift episode {} not before the last training episode {}",
                d.episode, plan.train_episodes
            )));
        }
    }
    let mut env = SlicingEnv::new(plan.env.clone())?;
    let mut env_rng = ChaCha8Rng::seed_from_u64(derive_seed(plan.seed, &[1]));
    let mut agent_rng = ChaCha8Rng::seed_from_u64(derive_seed(plan.seed, &[2]));
    let mut eval_rng = ChaCha8Rng::seed_from_u64(derive_seed(plan.seed, &[3]));
    let mut learner = build_learner(plan, &env, &mut agent_rng)?;

    let mut records = Vec::with_capacity(plan.train_episodes + plan.eval_episodes);
    let mut rngs = [&mut env_rng, &mut agent_rng];
    for e in 0..plan.train_episodes {
        if let Some(d) = plan.drift.as_ref().filter(|d| d.episode == e) {
            env.apply_drift(d.models.clone())?;
        }
        records.push(run_cell_episode(
            &mut env,
            learner.as_mut(),
            EpisodeLength::Steps(plan.steps_per_episode),
            Phase::Train,
            e,
            &mut rngs,
        )?);
    }
    let mut eval_agent_rng = ChaCha8Rng::seed_from_u64(derive_seed(plan.seed, &[4]));
    let mut eval_rngs = [&mut eval_rng, &mut eval_agent_rng];
    for e in 0..plan.eval_episodes {
        records.push(run_cell_episode(
            &mut env,
            learner.as_mut(),
            plan.eval_length,
            Phase::Eval,
            e,
            &mut eval_rngs,
        )?);
    }

    let train: Vec<f64> = records
        .iter()
        .filter(|r| r.phase == Phase::Train)
        .map(|r| r.mean_utility)
        .collect();
    let split = plan.drift.as_ref().map_or(train.len(), |d| d.episode);
    let (before, after) = train.split_at(split);
    let rule = plan.rule;
    let convergence = detect_convergence(before, rule.window, rule.tolerance);
    let post_drift_convergence = plan
        .drift
        .as_ref()
        .and_then(|_| detect_convergence(after, rule.window, rule.tolerance));
    let post_convergence_utility = convergence.map(|c| mean(&before[c..]));

    let evals: Vec<&EpisodeRecord> = records.iter().filter(|r| r.phase == Phase::Eval).collect();
    let eval = if evals.is_empty() {
        EvalStats::default()
    } else {
        let steps: usize = evals.iter().map(|r| r.steps).sum();
        let n = steps.max(1) as f64;
        EvalStats {
            mean_utility: evals
                .iter()
                .map(|r| r.mean_utility * r.steps as f64)
                .sum::<f64>()
                / n,
            mean_accuracy: evals
                .iter()
                .map(|r| r.mean_accuracy * r.steps as f64)
                .sum::<f64>()
                / n,
            mean_steps: steps as f64 / evals.len() as f64,
            mean_budget_steps: evals.iter().map(|r| r.budget_steps() as f64).sum::<f64>()
                / evals.len() as f64,
        }
    };
    let total_steps = records.iter().map(|r| r.steps as u64).sum();
    Ok(CellResult {
        agent: plan.agent,
        seed_index,
        seed: plan.seed,
        steps_per_episode: plan.steps_per_episode,
        train_episodes: plan.train_episodes,
        records,
        convergence,
        post_drift_convergence,
        post_convergence_utility,
        eval,
        total_steps,
        wall_ms: u64::try_from(started.elapsed().as_millis()).unwrap_or(u64::MAX),
    })
}

/// `rngs[0]` drives the environment, `rngs[1]` the agent.
fn run_cell_episode(
    env: &mut SlicingEnv<f64>,
    learner: &mut dyn Learner,
    length: EpisodeLength,
    phase: Phase,
    episode: usize,
    rngs: &mut [&mut ChaCha8Rng; 2],
) -> Result<EpisodeRecord, HarnessError> {
    let [env_rng, agent_rng] = rngs;
    let mut split = SplitLearner {
        inner: learner,
        rng: agent_rng,
    };
    run_episode(env, &mut split, length, phase, episode, env_rng)
}

/// Routes agent randomness to a dedicated stream so that the environment's
/// random sequence does not depend on the agent's consumption.
struct SplitLearner<'a> {
    inner: &'a mut dyn Learner,
    rng: &'a mut ChaCha8Rng,
}

impl Learner for SplitLearner<'_> {
    fn kind(&self) -> AgentKind {
        self.inner.kind()
    }

    fn act(&mut self, obs: &[f64], _rng: &mut ChaCha8Rng) -> Result<usize, HarnessError> {
        self.inner.act(obs, self.rng)
    }

    fn learn(
        &mut self,
        obs: &[f64],
        action: usize,
        outcome: &StepOutcome<f64>,
        _rng: &mut ChaCha8Rng,
    ) -> Result<Option<f64>, HarnessError> {
        self.inner.learn(obs, action, outcome, self.rng)
    }

    fn end_episode(&mut self) {
        self.inner.end_episode();
    }

    fn eval_act(&mut self, obs: &[f64], _rng: &mut ChaCha8Rng) -> Result<usize, HarnessError> {
        self.inner.eval_act(obs, self.rng)
    }

    fn exploration(&self) -> f64 {
        self.inner.exploration()
    }
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        f64::NAN
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Median where a missing value counts as +∞.
fn median_opt(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.map(|x| x.unwrap_or(f64::INFINITY)).collect();
    let m = median(&v);
    m.is_finite().then_some(m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSummary {
    pub agent: AgentKind,
    pub seeds: usize,
    pub steps_per_episode: usize,
    pub train_episodes: usize,
    /// Median over seeds; a run that never settles counts as +∞.
    pub convergence_episode: Option<f64>,
    /// `convergence_episode × steps_per_episode`.
    pub convergence_steps: Option<f64>,
    pub post_drift_convergence_episode: Option<f64>,
    pub post_drift_convergence_steps: Option<f64>,
    pub post_convergence_utility: Option<f64>,
    /// Median over seeds of the evaluation-phase means.
    pub final_utility: f64,
    pub final_accuracy: f64,
    pub final_budget_steps: f64,
    pub total_steps: u64,
    pub wall_ms: u64,
}

impl AgentSummary {
    pub fn from_cells(cells: &[&CellResult]) -> Option<Self> {
        let first = cells.first()?;
        let spe = first.steps_per_episode as f64;
        let conv = median_opt(cells.iter().map(|c| c.convergence.map(|e| e as f64)));
        let post = median_opt(
            cells
                .iter()
                .map(|c| c.post_drift_convergence.map(|e| e as f64)),
        );
        let pcu: Vec<f64> = cells
            .iter()
            .filter_map(|c| c.post_convergence_utility)
            .collect();
        let med =
            |f: fn(&CellResult) -> f64| median(&cells.iter().map(|c| f(c)).collect::<Vec<_>>());
        Some(Self {
            agent: first.agent,
            seeds: cells.len(),
            steps_per_episode: first.steps_per_episode,
            train_episodes: first.train_episodes,
            convergence_episode: conv,
            convergence_steps: conv.map(|e| e * spe),
            post_drift_convergence_episode: post,
            post_drift_convergence_steps: post.map(|e| e * spe),
            post_convergence_utility: (!pcu.is_empty()).then(|| median(&pcu)),
            final_utility: med(|c| c.eval.mean_utility),
            final_accuracy: med(|c| c.eval.mean_accuracy),
            final_budget_steps: med(|c| c.eval.mean_budget_steps),
            total_steps: cells.iter().map(|c| c.total_steps).sum(),
            wall_ms: cells.iter().map(|c| c.wall_ms).sum(),
        })
    }
}

/// Steps×accuracy advantage of each agent over the other, in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdvantagePair {
    pub dqn: f64,
    pub exp3: f64,
}

impl AdvantagePair {
    pub fn new(dqn_steps: f64, dqn_acc: f64, exp3_steps: f64, exp3_acc: f64) -> Option<Self> {
        Some(Self {
            dqn: compute_advantage(dqn_steps, dqn_acc, exp3_steps, exp3_acc).ok()?,
            exp3: compute_advantage(exp3_steps, exp3_acc, dqn_steps, dqn_acc).ok()?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub experiment: String,
    pub label: String,
    pub master_seed: u64,
    pub seeds: usize,
    pub oracle_best_utility: Option<f64>,
    pub oracle_best_utility_after_drift: Option<f64>,
    pub agents: Vec<AgentSummary>,
    pub advantage: Option<AdvantagePair>,
}

impl ExperimentSummary {
    pub fn agent(&self, kind: AgentKind) -> Option<&AgentSummary> {
        self.agents.iter().find(|a| a.agent == kind)
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub summary: ExperimentSummary,
    pub cells: Vec<CellResult>,
}

impl ExperimentReport {
    /// Every episode record in cell order.
    pub fn records(&self) -> impl Iterator<Item = (&CellResult, &EpisodeRecord)> {
        self.cells
            .iter()
            .flat_map(|c| c.records.iter().map(move |r| (c, r)))
    }
}

const CONVERGENCE_STREAM: u64 = 11;
const ADVERSARY_STREAM: u64 = 12;
const BUDGET_STREAM: u64 = 13;

fn cell_seed(master: u64, experiment: u64, agent: AgentKind, seed_index: usize) -> u64 {
    derive_seed(master, &[experiment, agent.stream(), seed_index as u64])
}

fn check_seeds(agents: &[AgentKind], seeds: usize) -> Result<(), HarnessError> {
    if agents.is_empty() {
        return Err(HarnessError::InvalidConfig("no agents selected".into()));
    }
    if seeds == 0 {
        return Err(HarnessError::InvalidConfig(
            "at least one seed is required".into(),
        ));
    }
    Ok(())
}

fn summarize(
    experiment: &str,
    label: String,
    master: u64,
    seeds: usize,
    agents: &[AgentKind],
    cells: &[CellResult],
) -> (Vec<AgentSummary>, ExperimentSummary) {
    let summaries: Vec<AgentSummary> = agents
        .iter()
        .filter_map(|&a| {
            let mine: Vec<&CellResult> = cells.iter().filter(|c| c.agent == a).collect();
            AgentSummary::from_cells(&mine)
        })
        .collect();
    let summary = ExperimentSummary {
        experiment: experiment.to_owned(),
        label,
        master_seed: master,
        seeds,
        oracle_best_utility: None,
        oracle_best_utility_after_drift: None,
        agents: summaries.clone(),
        advantage: None,
    };
    (summaries, summary)
}

fn oracle_for(env: &EnvConfig<f64>) -> Result<Option<f64>, HarnessError> {
    let env = SlicingEnv::new(env.clone())?;
    Ok(best_expected_utility(&env)?.map(|(_, u)| u))
}

/// Trains on the initial services, swaps in the drifted ones and keeps
/// training; reports when each agent settles before and after the swap.
pub fn run_convergence(
    cfg: &ConvergenceConfig,
    settings: &AgentSettings,
    rule: ConvergenceRule,
    agents: &[AgentKind],
    master: u64,
    seeds: usize,
) -> Result<ExperimentReport, HarnessError> {
    settings.validate()?;
    check_seeds(agents, seeds)?;
    cfg.validate()?;
    let env = env_config(cfg.space, stationary_quality());
    let drifted = drift_models::<f64>(cfg.case);
    let mut cells = Vec::new();
    for &agent in agents {
        for s in 0..seeds {
            let plan = CellPlan {
                agent,
                env: env.clone(),
                dqn: settings.dqn.clone(),
                exp3_gamma: settings.exp3_gamma,
                drift: cfg.drift_episode.get(agent).map(|episode| Drift {
                    episode,
                    models: drifted.clone(),
                }),
                train_episodes: cfg.episodes.get(agent),
                steps_per_episode: settings.steps_per_episode.get(agent),
                eval_episodes: cfg.eval_episodes,
                eval_length: EpisodeLength::Steps(settings.steps_per_episode.get(agent)),
                rule,
                seed: cell_seed(master, CONVERGENCE_STREAM, agent, s),
            };
            cells.push(run_cell(&plan, s)?);
        }
    }
    let label = format!(
        "case={} space={}",
        case_name(cfg.case),
        space_name(cfg.space)
    );
    let (_, mut summary) = summarize("convergence", label, master, seeds, agents, &cells);
    summary.oracle_best_utility = oracle_for(&env)?;
    if cfg.drift_episode.exp3.is_some() || cfg.drift_episode.dqn.is_some() {
        summary.oracle_best_utility_after_drift = oracle_for(&EnvConfig {
            models: drifted,
            ..env
        })?;
    }
    Ok(ExperimentReport { summary, cells })
}

/// Trains both agents against a quality attacker and compares the accuracy
/// they deliver afterwards.
pub fn run_adversary(
    cfg: &AdversaryConfig,
    settings: &AgentSettings,
    rule: ConvergenceRule,
    agents: &[AgentKind],
    master: u64,
    seeds: usize,
) -> Result<ExperimentReport, HarnessError> {
    settings.validate()?;
    check_seeds(agents, seeds)?;
    cfg.validate()?;
    let env = env_config(cfg.space, cfg.attacker.quality());
    let mut cells = Vec::new();
    for &agent in agents {
        for s in 0..seeds {
            let plan = CellPlan {
                agent,
                env: env.clone(),
                dqn: settings.dqn.clone(),
                exp3_gamma: settings.exp3_gamma,
                drift: None,
                train_episodes: cfg.episodes.get(agent),
                steps_per_episode: settings.steps_per_episode.get(agent),
                eval_episodes: cfg.eval_episodes,
                eval_length: EpisodeLength::Steps(settings.steps_per_episode.get(agent)),
                rule,
                seed: cell_seed(master, ADVERSARY_STREAM, agent, s),
            };
            cells.push(run_cell(&plan, s)?);
        }
    }
    let label = format!(
        "space={} attacker={}",
        space_name(cfg.space),
        attacker_name(cfg.attacker)
    );
    let (sums, mut summary) = summarize("adversary", label, master, seeds, agents, &cells);
    summary.oracle_best_utility = oracle_for(&env)?;
    summary.advantage = pair(&sums, |a| (a.train_episodes as f64, a.final_accuracy));
    Ok(ExperimentReport { summary, cells })
}

/// Budgeted, multi-state runs: how many steps each trained agent takes
/// before the read/write allowance is gone, and at what accuracy.
pub fn run_budget(
    cfg: &BudgetConfig,
    settings: &AgentSettings,
    rule: ConvergenceRule,
    agents: &[AgentKind],
    master: u64,
    seeds: usize,
) -> Result<ExperimentReport, HarnessError> {
    settings.validate()?;
    check_seeds(agents, seeds)?;
    cfg.validate()?;
    let env = budget_env_config::<f64>(cfg.budget);
    let dqn = DqnConfig {
        discount: cfg.dqn_discount,
        ..settings.dqn.clone()
    };
    let mut cells = Vec::new();
    for &agent in agents {
        for s in 0..seeds {
            let plan = CellPlan {
                agent,
                env: env.clone(),
                dqn: dqn.clone(),
                exp3_gamma: settings.exp3_gamma,
                drift: None,
                train_episodes: cfg.episodes.get(agent),
                steps_per_episode: settings.steps_per_episode.get(agent),
                eval_episodes: cfg.eval_episodes,
                eval_length: EpisodeLength::UntilTerminal,
                rule,
                seed: cell_seed(master, BUDGET_STREAM, agent, s),
            };
            cells.push(run_cell(&plan, s)?);
        }
    }
    let label = format!("budget={}", cfg.budget);
    let (sums, mut summary) = summarize("budget", label, master, seeds, agents, &cells);
    summary.oracle_best_utility = oracle_for(&env)?;
    summary.advantage = pair(&sums, |a| (a.final_budget_steps, a.final_accuracy));
    Ok(ExperimentReport { summary, cells })
}

fn pair(sums: &[AgentSummary], f: impl Fn(&AgentSummary) -> (f64, f64)) -> Option<AdvantagePair> {
    let d = sums.iter().find(|a| a.agent == AgentKind::Dqn)?;
    let e = sums.iter().find(|a| a.agent == AgentKind::Exp3)?;
    let (ds, da) = f(d);
    let (es, ea) = f(e);
    AdvantagePair::new(ds, da, es, ea)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub agent: AgentKind,
    pub batch_size: Option<usize>,
    pub steps: usize,
    pub median_step_us: f64,
    /// EXP3 steps that fit in one DQN step.
    pub exp3_steps_per_dqn_step: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub space: SpacePreset,
    pub rows: Vec<TimingRow>,
    /// Externally reported EXP3:DQN step ratio, kept for comparison only.
    pub reference_band: (f64, f64),
}

pub const REFERENCE_STEP_RATIO: (f64, f64) = (2.5, 3.0);

fn median_step_time(
    env: &mut SlicingEnv<f64>,
    learner: &mut dyn Learner,
    steps: usize,
    rng: &mut ChaCha8Rng,
) -> Result<f64, HarnessError> {
    let mut out = StepOutcome::default();
    let mut times = Vec::with_capacity(steps);
    let mut obs = env.observation();
    for _ in 0..steps {
        let t = Instant::now();
        let a = learner.act(&obs, rng)?;
        env.step_into(a, rng, &mut out)?;
        learner.learn(&obs, a, &out, rng)?;
        times.push(t.elapsed().as_secs_f64() * 1e6);
        obs.clone_from(&out.next_observation);
    }
    Ok(median(&times))
}

/// Median wall-clock time of one full act/step/learn cycle per agent and
/// DQN batch size. DQN is measured with its replay buffer already holding
/// a full batch, so every timed step trains.
pub fn run_timing(
    cfg: &TimingConfig,
    settings: &AgentSettings,
    master: u64,
) -> Result<TimingReport, HarnessError> {
    settings.validate()?;
    cfg.validate()?;
    let env_cfg = env_config(cfg.space, stationary_quality());
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(master, &[14]));
    let mut env = SlicingEnv::new(env_cfg.clone())?;
    let mut exp3 = Exp3Learner::new(env.num_actions(), settings.exp3_gamma)?;
    let exp3_us = median_step_time(&mut env, &mut exp3, cfg.steps.max(1000), &mut rng)?;
    let mut rows = vec![TimingRow {
        agent: AgentKind::Exp3,
        batch_size: None,
        steps: cfg.steps.max(1000),
        median_step_us: exp3_us,
        exp3_steps_per_dqn_step: None,
    }];
    for &batch in &cfg.batch_sizes {
        let mut env = SlicingEnv::new(env_cfg.clone())?;
        let dqn_cfg = DqnConfig {
            batch_size: batch,
            ..settings.dqn.clone()
        };
        let mut dqn = DqnLearner::new(dqn_cfg, env.observation_dim(), env.num_actions(), &mut rng)?;
        // Fill the buffer without timing.
        let mut out = StepOutcome::default();
        let obs = env.observation();
        for _ in 0..batch {
            let a = dqn.act(&obs, &mut rng)?;
            env.step_into(a, &mut rng, &mut out)?;
            dqn.learn(&obs, a, &out, &mut rng)?;
        }
        let us = median_step_time(&mut env, &mut dqn, cfg.steps, &mut rng)?;
        rows.push(TimingRow {
            agent: AgentKind::Dqn,
            batch_size: Some(batch),
            steps: cfg.steps,
            median_step_us: us,
            exp3_steps_per_dqn_step: Some(us / exp3_us),
        });
    }
    Ok(TimingReport {
        space: cfg.space,
        rows,
        reference_band: REFERENCE_STEP_RATIO,
    })
}

pub fn case_name(case: DriftCase) -> &'static str {
    match case {
        DriftCase::Identity => "identity",
        DriftCase::Close => "close",
        DriftCase::Distinct => "distinct",
    }
}

pub fn space_name(space: SpacePreset) -> &'static str {
    match space {
        SpacePreset::Small => "small",
        SpacePreset::Big => "big",
    }
}

pub fn attacker_name(attacker: Attacker) -> &'static str {
    match attacker {
        Attacker::None => "none",
        Attacker::Low => "low",
        Attacker::High => "high",
    }
}
