//! DQN checks: finite-difference gradients and a toy MDP with a known
//! optimal policy.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use s2l_core::dqn::{DqnAgent, DqnConfig, Mlp, Scratch};

/// Mean squared TD error of a batch, evaluated through full forward passes.
pub fn batch_loss(net: &Mlp<f64>, batch: &[(Vec<f64>, usize, f64)]) -> f64 {
    batch
        .iter()
        .map(|(obs, a, y)| {
            let q = net.forward(obs).unwrap()[*a];
            (q - y).powi(2)
        })
        .sum::<f64>()
        / batch.len() as f64
}

pub fn analytic_gradient(net: &Mlp<f64>, batch: &[(Vec<f64>, usize, f64)]) -> Vec<f64> {
    let mut g = vec![0.0; net.num_params()];
    let mut s = Scratch::default();
    let scale = 1.0 / batch.len() as f64;
    for (obs, a, y) in batch {
        net.accumulate_gradient(obs, *a, *y, scale, &mut s, &mut g)
            .unwrap();
    }
    g
}

pub fn random_batch(
    rng: &mut ChaCha8Rng,
    d_in: usize,
    k: usize,
    n: usize,
) -> Vec<(Vec<f64>, usize, f64)> {
    (0..n)
        .map(|_| {
            let obs = (0..d_in).map(|_| rng.gen_range(-1.0..1.0)).collect();
            (obs, rng.gen_range(0..k), rng.gen_range(-2.0..2.0))
        })
        .collect()
}

/// Central-difference check of the analytic gradient on `networks` random
/// small MLPs; returns the worst relative error over every parameter.
pub fn worst_gradient_error(networks: usize) -> f64 {
    let h = 1e-5;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for _ in 0..networks {
        let d_in = rng.gen_range(1..4);
        let h1 = rng.gen_range(2..7);
        let h2 = rng.gen_range(2..7);
        let k = rng.gen_range(2..6);
        let net = Mlp::<f64>::init(&[d_in, h1, h2, k], &mut rng).unwrap();
        let batch = random_batch(&mut rng, d_in, k, 5);
        let g = analytic_gradient(&net, &batch);
        for (i, &gi) in g.iter().enumerate() {
            let mut plus = net.clone();
            plus.params_mut()[i] += h;
            let mut minus = net.clone();
            minus.params_mut()[i] -= h;
            let fd = (batch_loss(&plus, &batch) - batch_loss(&minus, &batch)) / (2.0 * h);
            let denom = gi.abs().max(fd.abs()).max(1e-6);
            worst = worst.max((gi - fd).abs() / denom);
        }
    }
    worst
}

pub fn config(batch: usize) -> DqnConfig<f64> {
    DqnConfig {
        batch_size: batch,
        hidden_layers: vec![16, 16],
        target_sync_interval: 100,
        replay_capacity: 10_000,
        ..DqnConfig::default()
    }
}

/// Two states, two actions, deterministic. Staying in s0 pays 0.5; moving
/// to s1 pays nothing but s1 pays 1 per step for staying.
pub fn toy_mdp(state: usize, action: usize) -> (usize, f64) {
    match (state, action) {
        (0, 0) => (0, 0.5),
        (0, _) => (1, 0.0),
        (1, 0) => (1, 1.0),
        _ => (0, 0.0),
    }
}

pub fn value_iteration_policy(gamma: f64) -> [usize; 2] {
    let mut v = [0.0f64; 2];
    for _ in 0..2000 {
        let mut next = [0.0; 2];
        for (s, slot) in next.iter_mut().enumerate() {
            *slot = (0..2)
                .map(|a| {
                    let (s2, r) = toy_mdp(s, a);
                    r + gamma * v[s2]
                })
                .fold(f64::MIN, f64::max);
        }
        v = next;
    }
    let mut policy = [0; 2];
    for (s, p) in policy.iter_mut().enumerate() {
        let q: Vec<f64> = (0..2)
            .map(|a| {
                let (s2, r) = toy_mdp(s, a);
                r + gamma * v[s2]
            })
            .collect();
        *p = usize::from(q[1] > q[0]);
    }
    policy
}

/// Trains a DQN on the toy MDP; returns (value-iteration policy, learned
/// greedy policy).
pub fn toy_mdp_policies() -> ([usize; 2], [usize; 2]) {
    let gamma = 0.9;
    let expected = value_iteration_policy(gamma);
    assert_eq!(expected, [1, 0], "s0 should give up 0.5 now to reach s1");
    let cfg = DqnConfig {
        batch_size: 32,
        discount: gamma,
        target_sync_interval: 200,
        ..config(32)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut agent = DqnAgent::new(cfg, 1, 2, &mut rng).unwrap();
    let mut s = 0;
    for t in 0..10_000 {
        let obs = [s as f64];
        let a = agent.act(&obs, &mut rng).unwrap();
        let (s2, r) = toy_mdp(s, a);
        agent
            .observe(&obs, a, r, &[s2 as f64], false, &mut rng)
            .unwrap();
        s = s2;
        if t % 100 == 99 {
            agent.decay_epsilon();
        }
    }
    let learned = [agent.greedy(&[0.0]).unwrap(), agent.greedy(&[1.0]).unwrap()];
    (expected, learned)
}
