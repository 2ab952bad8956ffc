use std::fs;
use std::path::Path;
use std::process::Command;

use s2l_cli::{run_args, RunConfig};
use s2l_core::harness::Scale;

const TINY: &str = r#"
scale = "desk"
seeds = 2
[agents]
steps_per_episode = { exp3 = 40, dqn = 20 }
[agents.dqn]
batch_size = 8
replay_capacity = 500
hidden_layers = [8]
[convergence]
episodes = { exp3 = 6, dqn = 6 }
drift_episode = { exp3 = 3, dqn = 3 }
eval_episodes = 1
[adversary]
episodes = { exp3 = 3, dqn = 3 }
eval_episodes = 1
[budget]
episodes = { exp3 = 2, dqn = 2 }
eval_episodes = 1
[timing]
steps = 50
batch_sizes = [8]
"#;

fn tiny(dir: &Path) -> String {
    let path = dir.join("tiny.toml");
    fs::write(&path, TINY).unwrap();
    path.display().to_string()
}

fn s2l(args: &[&str], cwd: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_s2l"))
        .args(args)
        .current_dir(cwd)
        .env_remove(s2l_cli::OUT_ENV)
        .output()
        .unwrap()
}

#[test]
fn empty_config_file_resolves_to_full_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.toml");
    fs::write(&path, "").unwrap();
    let out = run_args(["s2l", "validate", "--config", path.to_str().unwrap()]).unwrap();
    assert_eq!(out.config, RunConfig::defaults(Scale::Full));
}

#[test]
fn misspelled_key_is_rejected_by_name() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, "[agents]\ngama = 0.1\n").unwrap();
    let o = s2l(
        &["validate", "--config", path.to_str().unwrap()],
        dir.path(),
    );
    assert!(!o.status.success());
    let err = String::from_utf8(o.stderr).unwrap();
    assert_eq!(err.lines().count(), 1);
    let v: serde_json::Value = serde_json::from_str(err.trim()).unwrap();
    assert_eq!(v["error"], "config");
    assert!(v["message"].as_str().unwrap().contains("agents.gama"));
}

#[test]
fn resolved_config_round_trips_through_its_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = tiny(dir.path());
    let out = dir.path().join("run");
    let first = run_args([
        "s2l",
        "budget",
        "--config",
        &config,
        "--out",
        out.to_str().unwrap(),
    ])
    .unwrap();
    let written = out.join("config.toml");
    let again = run_args(["s2l", "validate", "--config", written.to_str().unwrap()]).unwrap();
    assert_eq!(again.config, first.config);
    assert_eq!(again.config_hash, first.config_hash);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = tiny(dir.path());
    for command in ["convergence", "adversary", "budget"] {
        let read = |name: &str| {
            let out = dir.path().join(format!("{command}-{name}"));
            run_args([
                "s2l",
                command,
                "--config",
                &config,
                "--out",
                out.to_str().unwrap(),
            ])
            .unwrap();
            fs::read(out.join("episodes.csv")).unwrap()
        };
        let (a, b) = (read("a"), read("b"));
        assert!(!a.is_empty());
        assert_eq!(a, b, "{command}");
    }
}

#[test]
fn seed_changes_results_but_not_layout() {
    let dir = tempfile::tempdir().unwrap();
    let config = tiny(dir.path());
    let run = |seed: &str| {
        let out = dir.path().join(seed);
        run_args([
            "s2l",
            "adversary",
            "--config",
            &config,
            "--seed",
            seed,
            "--out",
            out.to_str().unwrap(),
        ])
        .unwrap();
        fs::read_to_string(out.join("episodes.csv")).unwrap()
    };
    let (a, b) = (run("1"), run("2"));
    assert_ne!(a, b);
    assert_eq!(a.lines().count(), b.lines().count());
    assert_eq!(a.lines().nth(1), b.lines().nth(1));
}

#[test]
fn run_writes_every_file_with_the_config_hash() {
    let dir = tempfile::tempdir().unwrap();
    let config = tiny(dir.path());
    let out = dir.path().join("conv");
    let o = run_args([
        "s2l",
        "convergence",
        "--config",
        &config,
        "--out",
        out.to_str().unwrap(),
    ])
    .unwrap();
    for name in [
        "episodes.csv",
        "timings.csv",
        "summary.json",
        "run_meta.json",
        "config.toml",
    ] {
        assert!(out.join(name).is_file(), "{name}");
    }
    let csv = fs::read_to_string(out.join("episodes.csv")).unwrap();
    assert!(csv.lines().next().unwrap().ends_with(&o.config_hash));
    // 2 agents × 2 seeds × (6 train + 1 eval) episodes, plus comment and header.
    assert_eq!(csv.lines().count(), 2 + 2 * 2 * 7);
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("run_meta.json")).unwrap()).unwrap();
    assert_eq!(meta["config_hash"], o.config_hash.as_str());
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["summary"]["agents"].as_array().unwrap().len(), 2);
}

#[test]
fn validate_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let config = tiny(dir.path());
    let o = s2l(&["validate", "--config", &config], dir.path());
    assert!(o.status.success());
    let line = String::from_utf8(o.stdout).unwrap();
    let v: serde_json::Value = serde_json::from_str(line.trim()).unwrap();
    assert_eq!(v["ok"], true);
    assert_eq!(v["config_hash"].as_str().unwrap().len(), 64);
    let entries: Vec<_> = fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(entries.len(), 1);
}

#[test]
fn default_output_directory_is_per_command() {
    let dir = tempfile::tempdir().unwrap();
    let config = tiny(dir.path());
    let o = s2l(&["timing", "--config", &config], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("runs/timing/timing.csv").is_file());
    let o = Command::new(env!("CARGO_BIN_EXE_s2l"))
        .args(["timing", "--config", &config])
        .current_dir(dir.path())
        .env(s2l_cli::OUT_ENV, "from-env")
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(dir.path().join("from-env/timing.csv").is_file());
}

#[test]
fn failures_are_one_json_line_with_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["budget", "--budget", "-5"],
        vec!["convergence", "--case", "sideways"],
        vec!["frobnicate"],
        vec!["validate", "--config", "missing.toml"],
    ] {
        let o = s2l(&args, dir.path());
        assert!(!o.status.success(), "{args:?}");
        let err = String::from_utf8(o.stderr).unwrap();
        assert_eq!(err.lines().count(), 1, "{args:?}: {err}");
        let v: serde_json::Value = serde_json::from_str(err.trim()).unwrap();
        assert!(v["error"].is_string() && v["message"].is_string());
    }
    let o = s2l(&["--help"], dir.path());
    assert!(o.status.success());
}
