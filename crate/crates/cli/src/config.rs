//! Run configuration. One JSON file drives all commands; per-command
//! flags override individual fields.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use longtail_core::dataset::Distribution;
use longtail_core::gateway::ScoreStatistic;
use longtail_core::search::{RerankMode, SearchConfig, ThresholdKeying};

/// Environment variable consulted for API credentials when a backend
/// spec does not name its own.
pub const DEFAULT_API_KEY_ENV: &str = "LONGTAIL_API_KEY";

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendSpec {
    /// OpenAI-style HTTP completion endpoint with token logprobs.
    Http {
        base_url: String,
        model: String,
        #[serde(default)]
        api_key_env: Option<String>,
        #[serde(default = "default_max_tokens")]
        max_tokens: u32,
        /// Tokens whose probability counts as the affirmative answer;
        /// the maximum wins.
        #[serde(default)]
        affirmative_tokens: Option<Vec<String>>,
        #[serde(default = "default_in_flight")]
        max_in_flight: usize,
    },
    /// Deterministic world-backed backend for offline runs.
    Synthetic {
        world: PathBuf,
        #[serde(default = "default_distractor_rate")]
        distractor_rate: f64,
        #[serde(default)]
        noise: f64,
    },
    /// Fixed-answer responder for dry runs.
    Scripted {
        #[serde(default = "default_answer")]
        default_answer: String,
    },
}

fn default_max_tokens() -> u32 {
    256
}

fn default_in_flight() -> usize {
    4
}

fn default_distractor_rate() -> f64 {
    0.3
}

fn default_answer() -> String {
    "Yes".to_string()
}

/// Search parameters as they appear in the config file. All fields
/// optional; anything missing takes the standard schedule (4 calls of
/// 50 values at temperature 0.7, keep 75% capped at 200, stop after 2
/// empty calls).
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct SearchSection {
    pub calls_per_variable: Option<usize>,
    pub values_per_call: Option<usize>,
    pub temperature: Option<f64>,
    pub keep_fraction: Option<f64>,
    pub keep_cap: Option<usize>,
    pub early_stop_misses: Option<usize>,
    pub max_beams_per_step: Option<usize>,
    pub statistic: Option<ScoreStatistic>,
    pub keying: Option<ThresholdKeying>,
}

impl SearchSection {
    pub fn build(&self, direction: Distribution, seed: u64) -> SearchConfig {
        let defaults = SearchConfig::default();
        SearchConfig {
            calls_per_variable: self.calls_per_variable.unwrap_or(defaults.calls_per_variable),
            values_per_call: self.values_per_call.unwrap_or(defaults.values_per_call),
            temperature: self.temperature.unwrap_or(defaults.temperature),
            keep_fraction: self.keep_fraction.unwrap_or(defaults.keep_fraction),
            keep_cap: self.keep_cap.unwrap_or(defaults.keep_cap),
            early_stop_misses: self.early_stop_misses.unwrap_or(defaults.early_stop_misses),
            direction,
            max_beams_per_step: self.max_beams_per_step.unwrap_or(defaults.max_beams_per_step),
            statistic: self.statistic.unwrap_or(defaults.statistic),
            keying: self.keying.unwrap_or(defaults.keying),
            critic_enabled: true,
            rerank_mode: RerankMode::Likelihood,
            seed,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    /// Rule corpus path (block text or JSON).
    pub rules: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub search: SearchSection,
    /// Role name -> backend. Standard roles: knowledge, critic, scorer,
    /// responder; `scorer_b` backs `analyze compare`.
    pub backends: BTreeMap<String, BackendSpec>,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut config: RunConfig = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        // Paths in the file resolve relative to the file itself.
        let base = path.parent().unwrap_or(Path::new("."));
        config.rules = resolve(base, &config.rules);
        config.out = resolve(base, &config.out);
        for spec in config.backends.values_mut() {
            if let BackendSpec::Synthetic { world, .. } = spec {
                *world = resolve(base, world);
            }
        }
        config.validate()?;
        Ok(config)
    }

    /// Offline defaults: synthetic backends over the repo fixtures.
    pub fn offline_defaults() -> RunConfig {
        let world = PathBuf::from("fixtures/world.json");
        let synthetic = |noise: f64| BackendSpec::Synthetic {
            world: world.clone(),
            distractor_rate: default_distractor_rate(),
            noise,
        };
        RunConfig {
            rules: PathBuf::from("fixtures/rules.txt"),
            seed: 0,
            out: default_out(),
            search: SearchSection::default(),
            backends: BTreeMap::from([
                ("knowledge".to_string(), synthetic(0.0)),
                ("critic".to_string(), synthetic(0.0)),
                ("scorer".to_string(), synthetic(0.0)),
                (
                    "responder".to_string(),
                    BackendSpec::Scripted {
                        default_answer: default_answer(),
                    },
                ),
            ]),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.rules.exists() {
            bail!("rules path {} does not exist", self.rules.display());
        }
        for (role, spec) in &self.backends {
            if let BackendSpec::Synthetic { world, .. } = spec {
                if !world.exists() {
                    bail!("backend {role}: world file {} does not exist", world.display());
                }
            }
        }
        Ok(())
    }

    /// Apply a `--backend-role role=url,model` override.
    pub fn override_backend(&mut self, assignment: &str) -> Result<()> {
        let (role, target) = assignment
            .split_once('=')
            .context("expected role=url,model")?;
        let (url, model) = target.split_once(',').context("expected role=url,model")?;
        self.backends.insert(
            role.trim().to_string(),
            BackendSpec::Http {
                base_url: url.trim().to_string(),
                model: model.trim().to_string(),
                api_key_env: None,
                max_tokens: default_max_tokens(),
                affirmative_tokens: None,
                max_in_flight: default_in_flight(),
            },
        );
        Ok(())
    }
}

fn resolve(base: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}
