use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::envs::EnvConfig;
use crate::error::{Error, Result};
use crate::offline::{GeneratorKind, OfflineAlgo, OfflineConfig};
use crate::online::{NetConfig, OnlineSchedule, PpoConfig, Variant};

/// Environment variable that relocates relative output directories.
pub const OUTPUT_ROOT_ENV: &str = "SYMMARL_OUTPUT_ROOT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Ppo,
    Bc,
    Iql,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Ppo => "ppo",
            Algorithm::Bc => "bc",
            Algorithm::Iql => "iql",
        }
    }

    pub fn offline(self) -> Option<OfflineAlgo> {
        match self {
            Algorithm::Ppo => None,
            Algorithm::Bc => Some(OfflineAlgo::Bc),
            Algorithm::Iql => Some(OfflineAlgo::Iql),
        }
    }
}

/// Source of the offline training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetConfig {
    /// Dataset file; `make-dataset` writes it, offline training reads it if present.
    pub path: Option<PathBuf>,
    pub generator: GeneratorKind,
    pub episodes: usize,
    pub seed: u64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            path: None,
            generator: GeneratorKind::Expert,
            episodes: 500,
            seed: 0,
        }
    }
}

/// A complete experiment description shared by every subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub env: EnvConfig,
    pub variant: Variant,
    pub algorithm: Algorithm,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    /// Prefix of every output file; derived from variant, algorithm and env when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run_name: Option<String>,
    #[serde(default)]
    pub nets: NetConfig,
    #[serde(default)]
    pub ppo: PpoConfig,
    #[serde(default)]
    pub schedule: OnlineSchedule,
    #[serde(default)]
    pub offline: OfflineConfig,
    #[serde(default)]
    pub dataset: DatasetConfig,
    /// Deterministic evaluation episodes after training.
    #[serde(default = "default_eval_episodes")]
    pub eval_episodes: usize,
    /// Trained checkpoint for `eval` and `check-symmetry`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<PathBuf>,
}

fn default_eval_episodes() -> usize {
    20
}

/// Removes every object key starting with `_` (comments), recursively.
fn strip_comments(v: &mut Value) {
    match v {
        Value::Object(map) => {
            map.retain(|k, _| !k.starts_with('_'));
            map.values_mut().for_each(strip_comments);
        }
        Value::Array(items) => items.iter_mut().for_each(strip_comments),
        _ => {}
    }
}

impl RunConfig {
    pub fn from_json(text: &str, origin: &Path) -> Result<Self> {
        let mut value: Value = serde_json::from_str(text).map_err(|e| Error::Format {
            path: origin.to_path_buf(),
            reason: format!("invalid JSON at line {}, column {}: {e}", e.line(), e.column()),
        })?;
        strip_comments(&mut value);
        let mut cfg: RunConfig = serde_json::from_value(value).map_err(|e| Error::Format {
            path: origin.to_path_buf(),
            reason: e.to_string(),
        })?;
        cfg.resolve();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_json(&std::fs::read_to_string(path)?, path)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    fn resolve(&mut self) {
        if let Some(algo) = self.algorithm.offline() {
            self.offline.algo = algo;
        }
    }

    /// Checks every field before any work starts.
    pub fn validate(&self) -> Result<()> {
        self.env.validate()?;
        if self.seeds.is_empty() {
            return Err(Error::config("seeds", "at least one seed is required"));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::config("seeds", "seeds must be distinct"));
        }
        if self.output_dir.as_os_str().is_empty() {
            return Err(Error::config("output_dir", "must not be empty"));
        }
        if let Some(name) = &self.run_name {
            if name.is_empty() || name.contains(['/', '\\']) {
                return Err(Error::config("run_name", "must be a non-empty file name"));
            }
        }
        for (field, widths) in [("nets.policy_hidden", &self.nets.policy_hidden), ("nets.critic_hidden", &self.nets.critic_hidden)] {
            if widths.is_empty() || widths.contains(&0) {
                return Err(Error::config(field, "needs at least one positive width"));
            }
        }
        if !self.nets.init_log_std.is_finite() {
            return Err(Error::config("nets.init_log_std", "must be finite"));
        }
        self.ppo.validate()?;
        self.schedule.validate()?;
        self.offline.validate()?;
        if self.dataset.episodes == 0 {
            return Err(Error::config("dataset.episodes", "must be at least 1"));
        }
        Ok(())
    }

    /// File-name prefix of this run's outputs.
    pub fn run_id(&self) -> String {
        self.run_name
            .clone()
            .unwrap_or_else(|| format!("{}-{}-{}", self.variant.name().to_lowercase(), self.algorithm.name(), self.env_tag()))
    }

    /// Output directory, placed under `$SYMMARL_OUTPUT_ROOT` when that is set and the path is relative.
    pub fn output_dir(&self) -> PathBuf {
        resolve_output(&self.output_dir)
    }

    /// Dataset file used by `make-dataset` and offline training.
    pub fn dataset_path(&self) -> PathBuf {
        match &self.dataset.path {
            Some(p) => resolve_output(p),
            None => self.output_dir().join(format!("{}-{}.jsonl", self.env_tag(), self.dataset.generator)),
        }
    }

    /// The configured checkpoint, resolved like the output directory.
    pub fn checkpoint_path(&self) -> Option<PathBuf> {
        self.checkpoint.as_deref().map(resolve_output)
    }

    fn env_tag(&self) -> String {
        match self.env.n {
            Some(n) => format!("{}{n}", self.env.id),
            None => self.env.id.clone(),
        }
    }
}

pub fn resolve_output(path: &Path) -> PathBuf {
    match std::env::var_os(OUTPUT_ROOT_ENV) {
        Some(root) if path.is_relative() && !root.is_empty() => PathBuf::from(root).join(path),
        _ => path.to_path_buf(),
    }
}
