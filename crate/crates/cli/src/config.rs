//! Run configuration. A TOML file only needs the keys it changes; everything
//! else comes from the chosen scale (full scale when none is given).

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use s2l_core::env::presets::{DriftCase, SpacePreset};
use s2l_core::env::SlicingEnv;
use s2l_core::harness::{
    AdversaryConfig, AgentKind, AgentSettings, Attacker, BudgetConfig, ConvergenceConfig,
    ConvergenceRule, HarnessError, Scale, ScaleDefaults, TimingConfig,
};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config syntax: {0}")]
    Syntax(String),
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("`scale` must be \"desk\" or \"full\"")]
    BadScale,
    #[error("config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Harness(#[from] HarnessError),
}

/// Which agents a run trains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum AgentChoice {
    Exp3,
    Dqn,
    Both,
}

impl AgentChoice {
    pub fn kinds(self) -> Vec<AgentKind> {
        match self {
            Self::Exp3 => vec![AgentKind::Exp3],
            Self::Dqn => vec![AgentKind::Dqn],
            Self::Both => vec![AgentKind::Exp3, AgentKind::Dqn],
        }
    }
}

/// Everything a command needs, fully resolved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scale: Scale,
    #[serde(with = "seed_repr")]
    pub seed: u64,
    pub seeds: usize,
    pub agent: AgentChoice,
    /// Output directory; not part of the config hash.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub agents: AgentSettings,
    pub rule: ConvergenceRule,
    pub convergence: ConvergenceConfig,
    pub adversary: AdversaryConfig,
    pub budget: BudgetConfig,
    pub timing: TimingConfig,
}

// Keys that may be absent from the defaults because their value is `None`.
const OPTIONAL_KEYS: &[&str] = &["out"];

impl RunConfig {
    pub fn defaults(scale: Scale) -> Self {
        let d = ScaleDefaults::for_scale(scale);
        Self {
            scale,
            seed: 1,
            seeds: d.seeds,
            agent: AgentChoice::Both,
            out: None,
            agents: d.settings.clone(),
            rule: d.rule,
            convergence: d.convergence(DriftCase::Close),
            adversary: d.adversary(SpacePreset::Small, Attacker::Low),
            budget: d.budget(500.0),
            timing: d.timing(),
        }
    }

    /// Parses `text` over the defaults of `scale`, or of the file's own
    /// `scale` key, or of the full scale.
    pub fn parse(text: &str, scale: Option<Scale>) -> Result<Self, ConfigError> {
        let user: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| ConfigError::Syntax(e.message().to_owned()))?;
        let scale = match (scale, user.get("scale")) {
            (Some(s), _) => s,
            (None, None) => Scale::Full,
            (None, Some(v)) => match v.as_str() {
                Some("desk") => Scale::Desk,
                Some("full") => Scale::Full,
                _ => return Err(ConfigError::BadScale),
            },
        };
        let mut merged = toml::Table::try_from(Self::defaults(scale))
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        merge(&mut merged, user, "")?;
        merged.insert("scale".into(), toml::Value::String(scale.name().into()));
        let config: Self = toml::Value::Table(merged)
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError::Invalid(e.message().to_owned()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes to TOML")
    }

    /// Checks every section and builds each environment preset once,
    /// without simulating.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.agents.validate()?;
        self.convergence.validate()?;
        self.adversary.validate()?;
        self.budget.validate()?;
        self.timing.validate()?;
        if self.seeds == 0 {
            return Err(ConfigError::Invalid("`seeds` must be at least 1".into()));
        }
        if self.rule.window == 0 || self.rule.tolerance.is_nan() || self.rule.tolerance <= 0.0 {
            return Err(ConfigError::Invalid(
                "`rule.window` and `rule.tolerance` must be positive".into(),
            ));
        }
        use s2l_core::env::presets::{budget_env_config, env_config};
        for space in [SpacePreset::Small, SpacePreset::Big] {
            SlicingEnv::new(env_config(space, self.adversary.attacker.quality()))
                .map_err(HarnessError::from)?;
        }
        SlicingEnv::new(budget_env_config::<f64>(self.budget.budget))
            .map_err(HarnessError::from)?;
        Ok(())
    }

    /// SHA-256 of the canonical TOML form, output directory excluded.
    pub fn hash(&self) -> String {
        let canonical = Self {
            out: None,
            ..self.clone()
        };
        Sha256::digest(canonical.to_toml().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

fn merge(base: &mut toml::Table, user: toml::Table, prefix: &str) -> Result<(), ConfigError> {
    for (key, value) in user {
        let path = if prefix.is_empty() {
            key.clone()
        } else {
            format!("{prefix}.{key}")
        };
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(u)) => merge(b, u, &path)?,
            (Some(slot), v) => *slot = v,
            (None, v) if OPTIONAL_KEYS.contains(&path.as_str()) => {
                base.insert(key, v);
            }
            (None, _) => return Err(ConfigError::UnknownKey(path)),
        }
    }
    Ok(())
}

/// TOML integers are signed; seeds above `i64::MAX` are written as strings.
mod seed_repr {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(seed: &u64, s: S) -> Result<S::Ok, S::Error> {
        if i64::try_from(*seed).is_ok() {
            s.serialize_u64(*seed)
        } else {
            s.serialize_str(&seed.to_string())
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Int(u64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Int(v) => Ok(v),
            Repr::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}
