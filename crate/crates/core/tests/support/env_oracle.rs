//! Brute-force re-derivations of the simulator formulas.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use s2l_core::env::presets::{
    budget_env_config, env_config, grid, stationary_quality, SpacePreset,
};
use s2l_core::env::{
    ActionSpace, EnvConfig, GridConfig, ModelSpec, RwBudgetConfig, SlicingEnv, Violation,
};

/// One catalog entry: (data fraction, epochs, cpu frequency, data rate).
pub type Entry = (f64, u32, f64, f64);

/// Workload levels crossed with resource tiers, tier-major, truncated.
pub fn oracle_catalog(g: &GridConfig<f64>) -> Vec<Entry> {
    let mut out = Vec::new();
    for t in 0..g.cpu_freqs.len().min(g.data_rates.len()) {
        for l in 0..g.data_fractions.len().min(g.epochs.len()) {
            out.push((
                g.data_fractions[l],
                g.epochs[l],
                g.cpu_freqs[t],
                g.data_rates[t],
            ));
        }
    }
    if let Some(c) = g.catalog_size {
        out.truncate(c);
    }
    out
}

pub fn oracle_slices(catalog: &[Entry], models: usize, index: usize) -> Vec<Entry> {
    let c = catalog.len();
    (0..models)
        .map(|m| catalog[(index / c.pow(m as u32)) % c])
        .collect()
}

pub fn oracle_accuracy(model: &ModelSpec<f64>, df: f64, epochs: u32, max_epochs: u32) -> f64 {
    let u = df * epochs as f64 / max_epochs as f64;
    let a = model.accuracy.amplitudes();
    let b = model.accuracy.rates();
    let raw = a[0] * (b[0] * u).exp() + a[1] * (b[1] * u).exp() + a[2] * (b[2] * u).exp();
    raw.clamp(0.0, 1.0)
}

pub fn oracle_violations(cfg: &EnvConfig<f64>, slices: &[Entry]) -> Vec<Violation> {
    let k = &cfg.constraints;
    let mut v = Vec::new();
    if slices.iter().map(|s| s.2).sum::<f64>() > k.edge_cpu_capacity {
        v.push(Violation::EdgeCapacity);
    }
    if slices.iter().map(|s| s.3).sum::<f64>() > k.ran_bandwidth {
        v.push(Violation::RanBandwidth);
    }
    for (m, (&(df, ep, f, r), model)) in slices.iter().zip(&cfg.models).enumerate() {
        let samples = df * model.dataset_size;
        let train = ep as f64 * samples * model.cycles_per_sample / f;
        let comm = samples * model.sample_size / r + model.access_delay;
        if train + comm > model.latency_kpi {
            v.push(Violation::Latency(m));
        }
        if f * k.cpu_unit_price + r * k.rate_unit_price > model.cost_kpi {
            v.push(Violation::Cost(m));
        }
    }
    v
}

pub fn oracle_decrement(cfg: &EnvConfig<f64>, b: &RwBudgetConfig<f64>, slices: &[Entry]) -> f64 {
    slices
        .iter()
        .map(|&(df, ep, _, _)| {
            b.read_cost * ep as f64 + b.write_cost * df * cfg.grid.data_units_max
        })
        .sum()
}

/// 1000 random actions against the brute-force formulas, to 1e-12.
pub fn check_against_oracle(space: SpacePreset) {
    let cfg = env_config(space, stationary_quality());
    let catalog = oracle_catalog(&cfg.grid);
    let mut env = SlicingEnv::new(cfg.clone()).unwrap();
    assert_eq!(env.num_actions(), catalog.len().pow(3));
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut feasible_seen = 0;
    for _ in 0..1000 {
        let index = rng.gen_range(0..env.num_actions());
        let slices = oracle_slices(&catalog, 3, index);
        let decoded = env.space().decode(index).unwrap();
        for (s, &(df, ep, f, r)) in decoded.slices.iter().zip(&slices) {
            assert_eq!(
                (s.data_fraction, s.epochs, s.cpu_freq, s.data_rate),
                (df, ep, f, r)
            );
        }
        let expected = oracle_violations(&cfg, &slices);
        assert_eq!(
            env.feasibility(index).unwrap().violations,
            expected,
            "action {index}"
        );

        let out = env.step(index, &mut rng).unwrap();
        assert_eq!(out.violations, expected);
        assert_eq!(out.feasible, expected.is_empty());
        let accs: Vec<f64> = slices
            .iter()
            .zip(&cfg.models)
            .map(|(&(df, ep, _, _), m)| oracle_accuracy(m, df, ep, cfg.grid.max_epochs))
            .collect();
        for (a, b) in out.per_model_accuracy.iter().zip(&accs) {
            assert!((a - b).abs() <= 1e-12);
        }
        let utility = if expected.is_empty() {
            feasible_seen += 1;
            accs.iter().zip(&out.quality).map(|(a, q)| a * q).sum()
        } else {
            0.0
        };
        assert!((out.utility - utility).abs() <= 1e-12);
        let cost: f64 = slices
            .iter()
            .map(|&(_, _, f, r)| {
                f * cfg.constraints.cpu_unit_price + r * cfg.constraints.rate_unit_price
            })
            .sum();
        assert!((out.cost - cost).abs() <= 1e-12 * cost.max(1.0));
    }
    assert!(feasible_seen > 0, "sample never hit a feasible action");
}

/// Every small-space index decodes to a distinct joint action and back.
pub fn check_small_bijection() {
    let space = ActionSpace::build(&grid::<f64>(SpacePreset::Small), 3).unwrap();
    let catalog = oracle_catalog(&grid(SpacePreset::Small));
    let mut seen = std::collections::HashSet::new();
    for i in 0..space.len() {
        let a = space.decode(i).unwrap();
        assert_eq!(a.index, i);
        assert_eq!(space.encode(&a.slices), Some(i));
        let key: Vec<(u64, u32, u64, u64)> = a
            .slices
            .iter()
            .map(|s| {
                (
                    s.data_fraction.to_bits(),
                    s.epochs,
                    s.cpu_freq.to_bits(),
                    s.data_rate.to_bits(),
                )
            })
            .collect();
        assert!(seen.insert(key), "index {i} decodes to a duplicate");
        let oracle = oracle_slices(&catalog, 3, i);
        assert_eq!(a.slices[2].epochs, oracle[2].1);
    }
    assert_eq!(seen.len(), 4096);
    assert!(space.decode(space.len()).is_err());
}

pub fn check_budget_decrement() {
    let cfg = budget_env_config::<f64>(1e9);
    let b = cfg.budget.unwrap();
    let catalog = oracle_catalog(&cfg.grid);
    let env = SlicingEnv::new(cfg.clone()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut min = f64::INFINITY;
    for i in 0..env.num_actions() {
        let d = oracle_decrement(&cfg, &b, &oracle_slices(&catalog, 3, i));
        min = min.min(d);
        if rng.gen_bool(0.05) {
            assert!((env.decrement_of(i).unwrap() - d).abs() < 1e-12);
        }
    }
    assert!((env.min_decrement() - min).abs() < 1e-12);
}

/// Replays one action until the budget is gone; returns the steps that were
/// paid in full and the summed decrements.
pub fn replay_constant(budget: f64, action: usize) -> (usize, f64, f64) {
    let mut env = SlicingEnv::new(budget_env_config::<f64>(budget)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut paid, mut consumed) = (0, 0.0);
    while !env.state().terminal {
        let out = env.step(action, &mut rng).unwrap();
        consumed += out.budget_decrement;
        if !out.violations.contains(&Violation::BudgetOverdraw) {
            paid += 1;
        }
    }
    (paid, consumed, env.state().remaining_budget)
}

/// Replaying one action pays for exactly ⌊budget / decrement⌋ steps and
/// conserves the budget.
pub fn check_constant_replay() {
    let env = SlicingEnv::new(budget_env_config::<f64>(500.0)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut actions: Vec<usize> = (0..40)
        .map(|_| rng.gen_range(0..env.num_actions()))
        .collect();
    actions.push(0);
    for budget in [500.0, 1000.0, 2000.0, 777.7] {
        for &a in &actions {
            let d = env.decrement_of(a).unwrap();
            let (paid, consumed, remaining) = replay_constant(budget, a);
            assert_eq!(
                paid,
                (budget / d).floor() as usize,
                "budget {budget}, decrement {d}"
            );
            assert!((budget - remaining - consumed).abs() < 1e-9);
        }
    }
}
