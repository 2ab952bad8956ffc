//! Result files. `episodes.csv` holds only seeded quantities so reruns are
//! byte-identical; wall-clock times go to `timings.csv` and `run_meta.json`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use s2l_core::harness::{
    CellResult, EpisodeRecord, ExperimentReport, ExperimentSummary, TimingReport,
};

use crate::CliError;

pub const EPISODES_SCHEMA: &str = "s2l-episodes/1";
pub const TIMINGS_SCHEMA: &str = "s2l-timings/1";
pub const STEP_TIMING_SCHEMA: &str = "s2l-step-timing/1";
pub const SUMMARY_SCHEMA: &str = "s2l-summary/1";
pub const META_SCHEMA: &str = "s2l-run-meta/1";

pub const EPISODES_HEADER: &str =
    "agent,seed_index,seed,phase,episode,steps,budget_steps,overdraws,\
mean_utility,mean_accuracy,mean_cost,feasible_rate,exploration,mean_loss,remaining_budget";
pub const TIMINGS_HEADER: &str = "agent,seed_index,phase,episode,wall_ms";

fn real(x: f64) -> String {
    format!("{x:.6}")
}

fn opt_real(x: Option<f64>) -> String {
    x.map(real).unwrap_or_default()
}

fn episode_row(cell: &CellResult, r: &EpisodeRecord) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        r.agent,
        cell.seed_index,
        cell.seed,
        r.phase.name(),
        r.episode,
        r.steps,
        r.budget_steps(),
        r.overdraws,
        real(r.mean_utility),
        real(r.mean_accuracy),
        real(r.mean_cost),
        real(r.feasible_rate),
        real(r.exploration),
        opt_real(r.mean_loss),
        opt_real(r.remaining_budget),
    )
}

pub fn episodes_csv(report: &ExperimentReport, config_hash: &str) -> String {
    let mut s =
        format!("# schema={EPISODES_SCHEMA} config_hash={config_hash}\n{EPISODES_HEADER}\n");
    for (cell, r) in report.records() {
        s.push_str(&episode_row(cell, r));
        s.push('\n');
    }
    s
}

pub fn timings_csv(report: &ExperimentReport, config_hash: &str) -> String {
    let mut s = format!("# schema={TIMINGS_SCHEMA} config_hash={config_hash}\n{TIMINGS_HEADER}\n");
    for (cell, r) in report.records() {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            r.agent,
            cell.seed_index,
            r.phase.name(),
            r.episode,
            r.wall_ms
        );
    }
    s
}

pub fn step_timing_csv(report: &TimingReport, config_hash: &str) -> String {
    let mut s = format!(
        "# schema={STEP_TIMING_SCHEMA} config_hash={config_hash}\n\
         agent,batch_size,steps,median_step_us,exp3_steps_per_dqn_step\n"
    );
    for row in &report.rows {
        let _ = writeln!(
            s,
            "{},{},{},{:.3},{}",
            row.agent,
            row.batch_size.map(|b| b.to_string()).unwrap_or_default(),
            row.steps,
            row.median_step_us,
            row.exp3_steps_per_dqn_step
                .map(|r| format!("{r:.3}"))
                .unwrap_or_default(),
        );
    }
    s
}

#[derive(Serialize)]
struct CellBrief {
    agent: String,
    seed_index: usize,
    seed: u64,
    train_episodes: usize,
    convergence_episode: Option<usize>,
    post_drift_convergence_episode: Option<usize>,
    post_convergence_utility: Option<f64>,
    eval_utility: f64,
    eval_accuracy: f64,
    eval_budget_steps: f64,
    total_steps: u64,
}

pub fn summary_json(
    summary: &ExperimentSummary,
    cells: &[CellResult],
    config_hash: &str,
) -> String {
    let cells: Vec<CellBrief> = cells
        .iter()
        .map(|c| CellBrief {
            agent: c.agent.to_string(),
            seed_index: c.seed_index,
            seed: c.seed,
            train_episodes: c.train_episodes,
            convergence_episode: c.convergence,
            post_drift_convergence_episode: c.post_drift_convergence,
            post_convergence_utility: c.post_convergence_utility,
            eval_utility: c.eval.mean_utility,
            eval_accuracy: c.eval.mean_accuracy,
            eval_budget_steps: c.eval.mean_budget_steps,
            total_steps: c.total_steps,
        })
        .collect();
    let doc = json!({
        "schema": SUMMARY_SCHEMA,
        "config_hash": config_hash,
        "summary": summary,
        "cells": cells,
    });
    serde_json::to_string_pretty(&doc).expect("summary serializes") + "\n"
}

pub fn timing_summary_json(report: &TimingReport, config_hash: &str) -> String {
    let doc = json!({
        "schema": SUMMARY_SCHEMA,
        "config_hash": config_hash,
        "timing": report,
    });
    serde_json::to_string_pretty(&doc).expect("timing report serializes") + "\n"
}

/// Provenance of one run.
#[derive(Debug, Serialize)]
pub struct RunMeta<'a> {
    pub schema: &'static str,
    pub command: &'a str,
    pub config_hash: &'a str,
    pub master_seed: u64,
    pub seed_derivation: &'static str,
    pub versions: serde_json::Value,
    pub wall_ms: u64,
    pub config: &'a str,
}

pub const SEED_DERIVATION: &str =
    "splitmix64 chain: cell = derive(master, [experiment, agent, seed_index]) \
with experiment 11 convergence / 12 adversary / 13 budget / 14 timing and agent 1 exp3 / 2 dqn; \
per cell: [1] env, [2] agent, [3] eval env, [4] eval agent";

pub fn versions() -> serde_json::Value {
    json!({
        "s2l": env!("CARGO_PKG_VERSION"),
        "episodes_schema": EPISODES_SCHEMA,
        "timings_schema": TIMINGS_SCHEMA,
        "summary_schema": SUMMARY_SCHEMA,
    })
}

pub fn meta_json(meta: &RunMeta<'_>) -> String {
    serde_json::to_string_pretty(meta).expect("run meta serializes") + "\n"
}

/// Writes `contents` to `dir/name`, creating `dir` when needed.
pub fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Write {
        path: dir.to_path_buf(),
        source,
    })?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|source| CliError::Write {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}
