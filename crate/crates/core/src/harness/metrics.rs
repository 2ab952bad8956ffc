//! Convergence detection, the steps×accuracy advantage and seed splitting.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("advantage baseline steps·accuracy must be positive, got {0}")]
    ZeroBaseline(f64),
}

/// First episode at which a learning curve has flattened out.
///
/// With `R(e)` the mean of `series[e-W..e]` and `F(e)` the mean of
/// `series[e..e+W]`, the curve counts as converged at the first `e ≥ W`
/// where `|F(e) - R(e)| < tol·|R(e)|` holds and keeps holding for every
/// later `e' ≤ e + W` that can still be evaluated. Returns `None` for
/// series shorter than `2W` or curves that never settle.
pub fn detect_convergence(series: &[f64], window: usize, tol: f64) -> Option<usize> {
    if window == 0 || series.len() < 2 * window {
        return None;
    }
    let mut prefix = Vec::with_capacity(series.len() + 1);
    prefix.push(0.0);
    for &x in series {
        prefix.push(prefix.last().copied().unwrap_or(0.0) + x);
    }
    let w = window as f64;
    let mean = |a: usize, b: usize| (prefix[b] - prefix[a]) / w;
    let last = series.len() - window;
    let settled = |e: usize| {
        let r = mean(e - window, e);
        let f = mean(e, e + window);
        (f - r).abs() < tol * r.abs() || (f == r)
    };
    let mut e = window;
    while e <= last {
        if !settled(e) {
            e += 1;
            continue;
        }
        match (e + 1..=(e + window).min(last)).find(|&x| !settled(x)) {
            None => return Some(e),
            Some(broken) => e = broken + 1,
        }
    }
    None
}

/// Percentage by which `steps_a·acc_a` exceeds `steps_b·acc_b`.
pub fn compute_advantage(
    steps_a: f64,
    acc_a: f64,
    steps_b: f64,
    acc_b: f64,
) -> Result<f64, MetricError> {
    let base = steps_b * acc_b;
    if base.is_nan() || base <= 0.0 || base.is_infinite() {
        return Err(MetricError::ZeroBaseline(base));
    }
    Ok(100.0 * (steps_a * acc_a - base) / base)
}

/// The advantage of `b` over `a` implied by that of `a` over `b` (percent).
pub fn reciprocal_advantage(percent: f64) -> f64 {
    100.0 * (1.0 / (1.0 + percent / 100.0) - 1.0)
}

/// SplitMix64 finaliser.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed of the stream identified by `path` under `master`.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(master), |acc, &p| {
        splitmix64(acc ^ splitmix64(p))
    })
}

/// Median of a non-empty slice; `NaN` when empty.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
