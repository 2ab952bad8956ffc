//! Command-line front end: resolves a run configuration from defaults, a
//! TOML file and flags, runs one experiment and writes its result files.

pub mod config;
pub mod output;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use s2l_core::env::presets::{DriftCase, SpacePreset};
use s2l_core::harness::{
    run_adversary, run_budget, run_convergence, run_timing, Attacker, ExperimentReport,
    HarnessError, PerAgent, Scale, TimingReport,
};

pub use config::{AgentChoice, ConfigError, RunConfig};

/// Environment variable naming the output directory when `--out` is absent.
pub const OUT_ENV: &str = "S2L_OUT";

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Config(_) => "config",
            Self::Harness(_) => "experiment",
            Self::Read { .. } | Self::Write { .. } => "io",
            Self::Usage(_) => "usage",
        }
    }

    /// The single-line JSON form printed on stderr.
    pub fn to_json_line(&self) -> String {
        let message = self
            .to_string()
            .split_whitespace()
            .collect::<Vec<_>>()
            .join(" ");
        serde_json::json!({ "error": self.kind(), "message": message }).to_string()
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "s2l",
    version,
    about = "Train and compare EXP3 and DQN slicing agents"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML file overriding the scale defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory (else $S2L_OUT, the config's `out`, or runs/<command>).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub agent: Option<AgentChoice>,
    /// Training episodes for the selected agents.
    #[arg(long, global = true)]
    pub episodes: Option<usize>,
    /// Independent seeds per agent.
    #[arg(long, global = true)]
    pub seeds: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub scale: Option<ScaleArg>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convergence time before and after the services drift.
    Convergence {
        #[arg(long, value_enum)]
        case: Option<CaseArg>,
    },
    /// Accuracy under a sample-quality attacker.
    Adversary {
        #[arg(long, value_enum)]
        space: Option<SpaceArg>,
        #[arg(long, value_enum)]
        attacker: Option<AttackerArg>,
        /// DQN batch size.
        #[arg(long)]
        batch: Option<usize>,
    },
    /// Steps completed within a read/write budget.
    Budget {
        #[arg(long)]
        budget: Option<f64>,
        /// DQN batch size.
        #[arg(long)]
        batch: Option<usize>,
    },
    /// Per-step wall-clock cost of each agent.
    Timing {
        #[arg(long, value_enum)]
        space: Option<SpaceArg>,
        /// DQN batch size to time; repeatable.
        #[arg(long)]
        batch: Vec<usize>,
    },
    /// Resolve and check the configuration without running anything.
    Validate,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Convergence { .. } => "convergence",
            Self::Adversary { .. } => "adversary",
            Self::Budget { .. } => "budget",
            Self::Timing { .. } => "timing",
            Self::Validate => "validate",
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ScaleArg {
    Desk,
    Full,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CaseArg {
    Identity,
    Close,
    Distinct,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SpaceArg {
    Small,
    Big,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AttackerArg {
    None,
    Low,
    High,
}

impl From<ScaleArg> for Scale {
    fn from(s: ScaleArg) -> Self {
        match s {
            ScaleArg::Desk => Self::Desk,
            ScaleArg::Full => Self::Full,
        }
    }
}

impl From<CaseArg> for DriftCase {
    fn from(c: CaseArg) -> Self {
        match c {
            CaseArg::Identity => Self::Identity,
            CaseArg::Close => Self::Close,
            CaseArg::Distinct => Self::Distinct,
        }
    }
}

impl From<SpaceArg> for SpacePreset {
    fn from(s: SpaceArg) -> Self {
        match s {
            SpaceArg::Small => Self::Small,
            SpaceArg::Big => Self::Big,
        }
    }
}

impl From<AttackerArg> for Attacker {
    fn from(a: AttackerArg) -> Self {
        match a {
            AttackerArg::None => Self::None,
            AttackerArg::Low => Self::Low,
            AttackerArg::High => Self::High,
        }
    }
}

fn set_selected(target: &mut PerAgent<usize>, agent: AgentChoice, value: usize) {
    if agent != AgentChoice::Dqn {
        target.exp3 = value;
    }
    if agent != AgentChoice::Exp3 {
        target.dqn = value;
    }
}

/// Defaults, then the config file, then flags; validated.
pub fn resolve(cli: &Cli) -> Result<RunConfig, CliError> {
    let g = &cli.global;
    let scale = g.scale.map(Scale::from);
    let text = match &g.config {
        Some(path) => std::fs::read_to_string(path).map_err(|source| CliError::Read {
            path: path.clone(),
            source,
        })?,
        None => String::new(),
    };
    let mut c = RunConfig::parse(&text, scale)?;
    if let Some(seed) = g.seed {
        c.seed = seed;
    }
    if let Some(seeds) = g.seeds {
        c.seeds = seeds;
    }
    if let Some(agent) = g.agent {
        c.agent = agent;
    }
    match &cli.command {
        Command::Convergence { case } => {
            if let Some(case) = case {
                c.convergence.case = (*case).into();
            }
            if let Some(n) = g.episodes {
                set_selected(&mut c.convergence.episodes, c.agent, n);
            }
        }
        Command::Adversary {
            space,
            attacker,
            batch,
        } => {
            if let Some(space) = space {
                c.adversary.space = (*space).into();
            }
            if let Some(attacker) = attacker {
                c.adversary.attacker = (*attacker).into();
            }
            if let Some(b) = batch {
                c.agents.dqn.batch_size = *b;
            }
            if let Some(n) = g.episodes {
                set_selected(&mut c.adversary.episodes, c.agent, n);
            }
        }
        Command::Budget { budget, batch } => {
            if let Some(b) = budget {
                c.budget.budget = *b;
            }
            if let Some(b) = batch {
                c.agents.dqn.batch_size = *b;
            }
            if let Some(n) = g.episodes {
                set_selected(&mut c.budget.episodes, c.agent, n);
            }
        }
        Command::Timing { space, batch } => {
            if let Some(space) = space {
                c.timing.space = (*space).into();
            }
            if !batch.is_empty() {
                c.timing.batch_sizes = batch.clone();
            }
        }
        Command::Validate => {}
    }
    c.validate()?;
    Ok(c)
}

/// Output directory: `--out`, then `$S2L_OUT`, then the config, then
/// `runs/<command>`.
pub fn output_dir(cli: &Cli, config: &RunConfig) -> PathBuf {
    cli.global
        .out
        .clone()
        .or_else(|| {
            std::env::var_os(OUT_ENV)
                .filter(|v| !v.is_empty())
                .map(PathBuf::from)
        })
        .or_else(|| config.out.clone())
        .unwrap_or_else(|| Path::new("runs").join(cli.command.name()))
}

#[derive(Debug)]
pub struct RunOutcome {
    pub command: &'static str,
    pub config: RunConfig,
    pub config_hash: String,
    /// `None` for `validate`, which writes nothing.
    pub out_dir: Option<PathBuf>,
    pub files: Vec<PathBuf>,
    pub report: Option<ExperimentReport>,
    pub timing: Option<TimingReport>,
}

impl RunOutcome {
    /// The single-line JSON status printed on stdout.
    pub fn to_json_line(&self) -> String {
        let mut v = serde_json::json!({
            "ok": true,
            "command": self.command,
            "config_hash": self.config_hash,
        });
        if let Some(dir) = &self.out_dir {
            v["out_dir"] = dir.display().to_string().into();
        }
        v.to_string()
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run_args<I, T>(args: I) -> Result<RunOutcome, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(usage_error)?;
    run(&cli)
}

/// Reduces a clap error to its first line.
pub fn usage_error(e: clap::Error) -> CliError {
    let rendered = e.render().to_string();
    let first = rendered.lines().next().unwrap_or_default();
    CliError::Usage(first.trim_start_matches("error: ").to_owned())
}

pub fn run(cli: &Cli) -> Result<RunOutcome, CliError> {
    let started = Instant::now();
    let config = resolve(cli)?;
    let hash = config.hash();
    let command = cli.command.name();
    let mut outcome = RunOutcome {
        command,
        config: config.clone(),
        config_hash: hash.clone(),
        out_dir: None,
        files: Vec::new(),
        report: None,
        timing: None,
    };
    if let Command::Validate = cli.command {
        return Ok(outcome);
    }

    let agents = config.agent.kinds();
    let (s, r) = (&config.agents, config.rule);
    let mut files: Vec<(&str, String)> = Vec::new();
    match cli.command {
        Command::Timing { .. } => {
            let report = run_timing(&config.timing, s, config.seed)?;
            files.push(("timing.csv", output::step_timing_csv(&report, &hash)));
            files.push(("summary.json", output::timing_summary_json(&report, &hash)));
            outcome.timing = Some(report);
        }
        _ => {
            let report = match cli.command {
                Command::Convergence { .. } => run_convergence(
                    &config.convergence,
                    s,
                    r,
                    &agents,
                    config.seed,
                    config.seeds,
                )?,
                Command::Adversary { .. } => {
                    run_adversary(&config.adversary, s, r, &agents, config.seed, config.seeds)?
                }
                _ => run_budget(&config.budget, s, r, &agents, config.seed, config.seeds)?,
            };
            files.push(("episodes.csv", output::episodes_csv(&report, &hash)));
            files.push(("timings.csv", output::timings_csv(&report, &hash)));
            files.push((
                "summary.json",
                output::summary_json(&report.summary, &report.cells, &hash),
            ));
            outcome.report = Some(report);
        }
    }
    let toml = config.to_toml();
    files.push(("config.toml", toml.clone()));
    let meta = output::RunMeta {
        schema: output::META_SCHEMA,
        command,
        config_hash: &hash,
        master_seed: config.seed,
        seed_derivation: output::SEED_DERIVATION,
        versions: output::versions(),
        wall_ms: started.elapsed().as_millis() as u64,
        config: &toml,
    };
    files.push(("run_meta.json", output::meta_json(&meta)));

    let dir = output_dir(cli, &config);
    for (name, contents) in &files {
        outcome.files.push(output::write(&dir, name, contents)?);
    }
    outcome.out_dir = Some(dir);
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("s2l").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn flags_override_config_for_selected_agents() {
        let cli = parse(&[
            "convergence",
            "--scale",
            "desk",
            "--agent",
            "dqn",
            "--episodes",
            "400",
        ]);
        let c = resolve(&cli).unwrap();
        assert_eq!(c.convergence.episodes.dqn, 400);
        assert_eq!(c.convergence.episodes.exp3, 1000);
        assert_eq!(c.agent, AgentChoice::Dqn);
    }

    #[test]
    fn subcommand_flags_reach_their_section() {
        let cli = parse(&[
            "adversary",
            "--space",
            "big",
            "--attacker",
            "high",
            "--batch",
            "512",
        ]);
        let c = resolve(&cli).unwrap();
        assert_eq!(c.adversary.space, SpacePreset::Big);
        assert_eq!(c.adversary.attacker, Attacker::High);
        assert_eq!(c.agents.dqn.batch_size, 512);
        let c = resolve(&parse(&["timing", "--batch", "8", "--batch", "16"])).unwrap();
        assert_eq!(c.timing.batch_sizes, vec![8, 16]);
    }

    #[test]
    fn bad_flag_values_fail_validation() {
        let e = resolve(&parse(&["budget", "--budget", "0"])).unwrap_err();
        assert_eq!(e.kind(), "config");
        // Drift must stay inside the shortened run.
        let e = resolve(&parse(&[
            "convergence",
            "--scale",
            "desk",
            "--episodes",
            "100",
        ]))
        .unwrap_err();
        assert!(e.to_string().contains("drift"));
    }

    #[test]
    fn error_lines_are_single_line_json() {
        let e = CliError::Usage("bad\nthing".into());
        let line = e.to_json_line();
        assert!(!line.contains('\n'));
        let v: serde_json::Value = serde_json::from_str(&line).unwrap();
        assert_eq!(v["error"], "usage");
        assert_eq!(v["message"], "bad thing");
    }

    #[test]
    fn out_flag_wins() {
        let cli = parse(&["budget", "--out", "x"]);
        let c = resolve(&cli).unwrap();
        assert_eq!(output_dir(&cli, &c), PathBuf::from("x"));
    }
}
