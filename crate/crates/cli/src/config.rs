use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use atomlab::agent::PolicyMode;
use atomlab::train::TrainConfig;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BehaviorSettings {
    pub n_trajectories: usize,
    pub policy: PolicyMode,
    /// Clusters are read off the merge tree at this height.
    pub cut_height: f64,
    pub max_attempts: usize,
}

impl Default for BehaviorSettings {
    fn default() -> Self {
        BehaviorSettings { n_trajectories: 100, policy: PolicyMode::Greedy, cut_height: 1.1, max_attempts: 1_000_000 }
    }
}

/// Everything one experiment needs, read from a TOML file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub out_dir: PathBuf,
    pub train: TrainConfig,
    pub behavior: BehaviorSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig { out_dir: PathBuf::from("runs"), train: TrainConfig::default(), behavior: BehaviorSettings::default() }
    }
}

impl ExperimentConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        anyhow::ensure!(self.behavior.n_trajectories > 0, "n_trajectories must be positive");
        anyhow::ensure!(self.behavior.cut_height.is_finite(), "cut_height must be finite");
        Ok(())
    }
}
