//! Deep Q-network agent: ε-greedy acting, uniform replay, a periodically
//! synchronised target network and Adam on the mean squared TD error.

mod adam;
mod network;
mod replay;

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use adam::Adam;
pub use network::{Mlp, NetworkError, Scratch};
pub use replay::{ReplayBuffer, Transition};

use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DqnError {
    #[error("invalid DQN configuration: {0}")]
    InvalidConfig(&'static str),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DqnConfig<T> {
    pub batch_size: usize,
    pub discount: T,
    pub epsilon_start: T,
    /// Multiplier applied at every episode end.
    pub epsilon_decay: T,
    pub epsilon_final: T,
    /// Environment steps between hard target copies.
    pub target_sync_interval: u64,
    pub learning_rate: T,
    pub hidden_layers: Vec<usize>,
    pub replay_capacity: usize,
}

impl<T: Real> Default for DqnConfig<T> {
    fn default() -> Self {
        Self {
            batch_size: 2048,
            discount: T::of(0.9),
            epsilon_start: T::one(),
            epsilon_decay: T::of(0.99),
            epsilon_final: T::of(0.05),
            target_sync_interval: 1000,
            learning_rate: T::of(1e-3),
            hidden_layers: vec![64, 64],
            replay_capacity: 1_000_000,
        }
    }
}

impl<T: Real> DqnConfig<T> {
    pub fn validate(&self) -> Result<(), DqnError> {
        let bad = DqnError::InvalidConfig;
        if self.batch_size == 0 {
            return Err(bad("batch_size must be positive"));
        }
        if !(self.discount > T::zero() && self.discount < T::one()) {
            return Err(bad("discount must lie in (0, 1)"));
        }
        let (s, f) = (self.epsilon_start, self.epsilon_final);
        if !(f > T::zero() && f <= s && s <= T::one()) {
            return Err(bad("need 0 < epsilon_final <= epsilon_start <= 1"));
        }
        if !(self.epsilon_decay > T::zero() && self.epsilon_decay <= T::one()) {
            return Err(bad("epsilon_decay must lie in (0, 1]"));
        }
        if self.target_sync_interval == 0 {
            return Err(bad("target_sync_interval must be positive"));
        }
        if !(self.learning_rate > T::zero() && self.learning_rate.is_finite()) {
            return Err(bad("learning_rate must be positive"));
        }
        if self.hidden_layers.contains(&0) {
            return Err(bad("hidden layers must be non-empty"));
        }
        if self.replay_capacity == 0 {
            return Err(bad("replay_capacity must be positive"));
        }
        Ok(())
    }
}

/// `r` for terminal transitions, `r + γ·max_next` otherwise.
pub fn td_target<T: Real>(reward: T, max_next: T, terminal: bool, discount: T) -> T {
    if terminal {
        reward
    } else {
        reward + discount * max_next
    }
}

#[derive(Debug, Clone)]
pub struct DqnAgent<T> {
    config: DqnConfig<T>,
    online: Mlp<T>,
    target: Mlp<T>,
    adam: Adam<T>,
    replay: ReplayBuffer<T>,
    epsilon: T,
    env_steps: u64,
    train_steps: u64,
    syncs: u64,
    scratch: Scratch<T>,
    q_buf: Vec<T>,
    grad: Vec<T>,
    slots: Vec<usize>,
    targets: Vec<T>,
    touched: Vec<bool>,
    touched_rows: Vec<usize>,
    /// `max_a Q_target(obs)[a]` keyed by observation bits; valid until the
    /// next sync because the target network is frozen in between.
    target_max: HashMap<Vec<u64>, T>,
    key: Vec<u64>,
    group_of: HashMap<Vec<u64>, usize>,
    groups: Vec<Vec<(usize, T)>>,
    group_slot: Vec<usize>,
}

impl<T: Real> DqnAgent<T> {
    pub fn new<R: Rng + ?Sized>(
        config: DqnConfig<T>,
        obs_dim: usize,
        num_actions: usize,
        rng: &mut R,
    ) -> Result<Self, DqnError> {
        config.validate()?;
        let mut dims = vec![obs_dim];
        dims.extend_from_slice(&config.hidden_layers);
        dims.push(num_actions);
        let online = Mlp::init(&dims, rng)?;
        let target = online.clone();
        let n = online.num_params();
        Ok(Self {
            adam: Adam::new(n, config.learning_rate),
            replay: ReplayBuffer::new(config.replay_capacity, obs_dim),
            epsilon: config.epsilon_start,
            config,
            online,
            target,
            env_steps: 0,
            train_steps: 0,
            syncs: 0,
            scratch: Scratch::default(),
            q_buf: Vec::new(),
            grad: vec![T::zero(); n],
            slots: Vec::new(),
            targets: Vec::new(),
            touched: vec![false; num_actions],
            touched_rows: Vec::new(),
            target_max: HashMap::new(),
            key: Vec::new(),
            group_of: HashMap::new(),
            groups: Vec::new(),
            group_slot: Vec::new(),
        })
    }

    pub fn config(&self) -> &DqnConfig<T> {
        &self.config
    }

    pub fn epsilon(&self) -> T {
        self.epsilon
    }

    pub fn num_actions(&self) -> usize {
        self.online.output_dim()
    }

    pub fn online(&self) -> &Mlp<T> {
        &self.online
    }

    pub fn target(&self) -> &Mlp<T> {
        &self.target
    }

    pub fn replay(&self) -> &ReplayBuffer<T> {
        &self.replay
    }

    pub fn env_steps(&self) -> u64 {
        self.env_steps
    }

    pub fn train_steps(&self) -> u64 {
        self.train_steps
    }

    pub fn syncs(&self) -> u64 {
        self.syncs
    }

    pub fn q_values(&mut self, obs: &[T]) -> Result<Vec<T>, DqnError> {
        self.online
            .forward_into(obs, &mut self.scratch, &mut self.q_buf)?;
        Ok(self.q_buf.clone())
    }

    /// Greedy action, lowest index on ties.
    pub fn greedy(&mut self, obs: &[T]) -> Result<usize, DqnError> {
        Ok(self.online.max_output(obs, &mut self.scratch)?.0)
    }

    /// ε-greedy. One uniform draw decides between exploring and exploiting
    /// regardless of ε, so the random stream does not depend on its value.
    pub fn act<R: Rng + ?Sized>(&mut self, obs: &[T], rng: &mut R) -> Result<usize, DqnError> {
        let u: f64 = rng.gen();
        if T::of(u) < self.epsilon {
            Ok(rng.gen_range(0..self.num_actions()))
        } else {
            self.greedy(obs)
        }
    }

    /// Stores a transition, trains once the buffer holds a full batch and
    /// syncs the target on schedule. Returns the batch loss when trained.
    pub fn observe<R: Rng + ?Sized>(
        &mut self,
        obs: &[T],
        action: usize,
        reward: T,
        next_obs: &[T],
        terminal: bool,
        rng: &mut R,
    ) -> Result<Option<T>, DqnError> {
        self.replay.push(obs, action, reward, next_obs, terminal);
        self.env_steps += 1;
        let loss = self.train_step(rng)?;
        if self
            .env_steps
            .is_multiple_of(self.config.target_sync_interval)
        {
            self.sync_target();
        }
        Ok(loss)
    }

    /// TD target of one transition under the current target network.
    pub fn td_target_for(
        &mut self,
        reward: T,
        next_obs: &[T],
        terminal: bool,
    ) -> Result<T, DqnError> {
        if terminal {
            return Ok(reward);
        }
        let max_next = self.target_max_of(next_obs)?;
        Ok(td_target(reward, max_next, false, self.config.discount))
    }

    fn target_max_of(&mut self, obs: &[T]) -> Result<T, DqnError> {
        memo_max(
            &self.target,
            &mut self.target_max,
            &mut self.key,
            &mut self.scratch,
            obs,
        )
    }

    /// One Adam step on a uniform minibatch. `None` while the buffer holds
    /// fewer than `batch_size` transitions.
    pub fn train_step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Option<T>, DqnError> {
        let batch = self.config.batch_size;
        if self.replay.len() < batch {
            return Ok(None);
        }
        let mut slots = std::mem::take(&mut self.slots);
        self.replay.sample_slots(batch, rng, &mut slots);

        // Consecutive samples usually share their next observation, so the
        // previous lookup is checked before the memo.
        self.targets.clear();
        let mut prev: Option<(usize, T)> = None;
        for &s in &slots {
            let reward = self.replay.reward_at(s);
            if self.replay.terminal_at(s) {
                self.targets.push(reward);
                continue;
            }
            let next = self.replay.next_obs_at(s);
            let max_next = match prev {
                Some((p, v)) if self.replay.next_obs_at(p) == next => v,
                _ => {
                    let v = memo_max(
                        &self.target,
                        &mut self.target_max,
                        &mut self.key,
                        &mut self.scratch,
                        next,
                    )?;
                    prev = Some((s, v));
                    v
                }
            };
            self.targets
                .push(td_target(reward, max_next, false, self.config.discount));
        }

        // Samples sharing an observation share one hidden pass; groups are
        // processed in order of first appearance.
        self.group_of.clear();
        self.groups.iter_mut().for_each(Vec::clear);
        let mut used = 0;
        let mut prev: Option<(usize, usize)> = None;
        for (&s, &y) in slots.iter().zip(&self.targets) {
            let obs = self.replay.obs_at(s);
            let g = match prev {
                Some((p, g)) if self.replay.obs_at(p) == obs => g,
                _ => {
                    self.key.clear();
                    self.key.extend(obs.iter().map(|x| x.as_f64().to_bits()));
                    let g = match self.group_of.get(self.key.as_slice()) {
                        Some(&g) => g,
                        None => {
                            self.group_of.insert(self.key.clone(), used);
                            if self.groups.len() == used {
                                self.groups.push(Vec::new());
                                self.group_slot.push(s);
                            }
                            self.group_slot[used] = s;
                            used += 1;
                            used - 1
                        }
                    };
                    prev = Some((s, g));
                    g
                }
            };
            let action = self.replay.action_at(s);
            self.groups[g].push((action, y));
            if !self.touched[action] {
                self.touched[action] = true;
                self.touched_rows.push(action);
            }
        }
        let scale = T::one() / T::of_usize(batch);
        let mut loss = T::zero();
        for g in 0..used {
            loss += self.online.accumulate_group_gradient(
                self.replay.obs_at(self.group_slot[g]),
                &self.groups[g],
                scale,
                &mut self.scratch,
                &mut self.grad,
            )?;
        }
        self.slots = slots;

        // Hidden layers get a dense Adam step; output rows only where an
        // action appeared in the batch.
        self.adam.begin_step();
        let hidden = self.online.hidden_span();
        self.adam
            .apply(self.online.params_mut(), &self.grad, hidden.clone());
        self.grad[hidden].iter_mut().for_each(|g| *g = T::zero());
        for &a in &self.touched_rows {
            let (row, bias) = self.online.output_row_span(a);
            self.adam
                .apply(self.online.params_mut(), &self.grad, row.clone());
            self.adam
                .apply(self.online.params_mut(), &self.grad, bias..bias + 1);
            self.grad[row].iter_mut().for_each(|g| *g = T::zero());
            self.grad[bias] = T::zero();
            self.touched[a] = false;
        }
        self.touched_rows.clear();
        self.train_steps += 1;
        Ok(Some(loss * scale))
    }

    /// Hard copy online → target.
    pub fn sync_target(&mut self) {
        self.target
            .params_mut()
            .copy_from_slice(self.online.params());
        self.target_max.clear();
        self.syncs += 1;
    }

    /// `ε ← max(ε_final, ε·decay)`; call once per episode.
    pub fn decay_epsilon(&mut self) -> T {
        self.epsilon = (self.epsilon * self.config.epsilon_decay).max(self.config.epsilon_final);
        self.epsilon
    }

    /// Online network parameters with a layer-dimension header.
    pub fn snapshot(&self) -> Vec<T> {
        self.online.snapshot()
    }

    pub fn restore(&mut self, snapshot: &[T]) -> Result<(), DqnError> {
        let net = Mlp::restore(snapshot)?;
        if net.dims() != self.online.dims() {
            return Err(NetworkError::BadSnapshot.into());
        }
        self.online = net;
        self.sync_target();
        Ok(())
    }
}

/// `max_a net(obs)[a]`, memoised by observation bits.
fn memo_max<T: Real>(
    net: &Mlp<T>,
    memo: &mut HashMap<Vec<u64>, T>,
    key: &mut Vec<u64>,
    scratch: &mut Scratch<T>,
    obs: &[T],
) -> Result<T, DqnError> {
    key.clear();
    key.extend(obs.iter().map(|x| x.as_f64().to_bits()));
    if let Some(&v) = memo.get(key.as_slice()) {
        return Ok(v);
    }
    let (_, v) = net.max_output(obs, scratch)?;
    memo.insert(key.clone(), v);
    Ok(v)
}
