//! Fixed-capacity FIFO replay memory with uniform sampling.

use rand::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct Transition<T> {
    pub obs: Vec<T>,
    pub action: usize,
    pub reward: T,
    pub next_obs: Vec<T>,
    pub terminal: bool,
}

/// Transitions stored in flat arrays; the oldest entry is overwritten once
/// the buffer is full.
#[derive(Debug, Clone)]
pub struct ReplayBuffer<T> {
    capacity: usize,
    obs_dim: usize,
    obs: Vec<T>,
    next_obs: Vec<T>,
    actions: Vec<usize>,
    rewards: Vec<T>,
    terminals: Vec<bool>,
    /// Slot the next push writes to.
    head: usize,
    len: usize,
}

impl<T: Copy> ReplayBuffer<T> {
    pub fn new(capacity: usize, obs_dim: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            capacity,
            obs_dim,
            obs: Vec::new(),
            next_obs: Vec::new(),
            actions: Vec::new(),
            rewards: Vec::new(),
            terminals: Vec::new(),
            head: 0,
            len: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn obs_dim(&self) -> usize {
        self.obs_dim
    }

    pub fn push(&mut self, obs: &[T], action: usize, reward: T, next_obs: &[T], terminal: bool) {
        assert_eq!(obs.len(), self.obs_dim, "observation width");
        assert_eq!(next_obs.len(), self.obs_dim, "next observation width");
        if self.actions.len() < self.capacity {
            self.obs.extend_from_slice(obs);
            self.next_obs.extend_from_slice(next_obs);
            self.actions.push(action);
            self.rewards.push(reward);
            self.terminals.push(terminal);
        } else {
            let span = self.head * self.obs_dim..(self.head + 1) * self.obs_dim;
            self.obs[span.clone()].copy_from_slice(obs);
            self.next_obs[span].copy_from_slice(next_obs);
            self.actions[self.head] = action;
            self.rewards[self.head] = reward;
            self.terminals[self.head] = terminal;
        }
        self.head = (self.head + 1) % self.capacity;
        self.len = (self.len + 1).min(self.capacity);
    }

    /// Slot index of the `i`-th oldest stored transition.
    fn slot(&self, i: usize) -> usize {
        if self.len < self.capacity {
            i
        } else {
            (self.head + i) % self.capacity
        }
    }

    pub fn obs_at(&self, slot: usize) -> &[T] {
        &self.obs[slot * self.obs_dim..(slot + 1) * self.obs_dim]
    }

    pub fn next_obs_at(&self, slot: usize) -> &[T] {
        &self.next_obs[slot * self.obs_dim..(slot + 1) * self.obs_dim]
    }

    pub fn action_at(&self, slot: usize) -> usize {
        self.actions[slot]
    }

    pub fn reward_at(&self, slot: usize) -> T {
        self.rewards[slot]
    }

    pub fn terminal_at(&self, slot: usize) -> bool {
        self.terminals[slot]
    }

    /// `i`-th oldest transition, copied out.
    pub fn get(&self, i: usize) -> Option<Transition<T>> {
        (i < self.len).then(|| {
            let s = self.slot(i);
            Transition {
                obs: self.obs_at(s).to_vec(),
                action: self.actions[s],
                reward: self.rewards[s],
                next_obs: self.next_obs_at(s).to_vec(),
                terminal: self.terminals[s],
            }
        })
    }

    /// Uniform slot indices, with replacement.
    pub fn sample_slots<R: Rng + ?Sized>(&self, n: usize, rng: &mut R, out: &mut Vec<usize>) {
        out.clear();
        if self.len == 0 {
            return;
        }
        out.extend((0..n).map(|_| rng.gen_range(0..self.len)));
    }
}
