//! Exhaustive reference over the joint action space.

use crate::env::{EnvError, SlicingEnv};

/// Expected utility of every action with quality at its mean; `None` for
/// infeasible actions. Budget limits are ignored.
pub fn expected_utilities(env: &SlicingEnv<f64>) -> Result<Vec<Option<f64>>, EnvError> {
    let q = env.config().quality.mean();
    (0..env.num_actions())
        .map(|i| {
            if !env.feasibility(i)?.is_feasible() {
                return Ok(None);
            }
            Ok(Some(env.accuracies(i)?.iter().map(|a| a * q).sum()))
        })
        .collect()
}

/// Best feasible action and its expected utility.
pub fn best_expected_utility(env: &SlicingEnv<f64>) -> Result<Option<(usize, f64)>, EnvError> {
    Ok(expected_utilities(env)?
        .into_iter()
        .enumerate()
        .filter_map(|(i, u)| u.map(|u| (i, u)))
        .fold(None, |best: Option<(usize, f64)>, (i, u)| match best {
            Some((_, b)) if b >= u => best,
            _ => Some((i, u)),
        }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::presets::{env_config, stationary_quality, SpacePreset};

    #[test]
    fn best_small_action_is_feasible_and_maximal() {
        let env =
            SlicingEnv::new(env_config::<f64>(SpacePreset::Small, stationary_quality())).unwrap();
        let all = expected_utilities(&env).unwrap();
        let (best, u) = best_expected_utility(&env).unwrap().unwrap();
        assert_eq!(all[best], Some(u));
        assert!(all.iter().flatten().all(|&x| x <= u));
        let feasible = all.iter().filter(|x| x.is_some()).count();
        assert!(feasible > 0 && feasible < all.len());
        assert!(u > 0.0 && u <= 3.0 * 0.9);
    }
}
