use serde::{Deserialize, Serialize};

use crate::atoms::AtomsSettings;
use crate::env::{EnvConfig, GameVariant};
use crate::error::{Error, Result};
use crate::net::NetworkArch;

/// Actor-critic training configuration. Defaults are the desk-scale setup.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub lr: f64,
    pub gamma: f64,
    pub entropy_coef: f64,
    pub value_coef: f64,
    pub n_envs: usize,
    pub n_steps: usize,
    pub total_steps: u64,
    pub seed: u64,
    pub variant: GameVariant,
    /// Evaluation cadence in environment steps.
    pub eval_every: u64,
    /// ATOMs measurement cadence in environment steps.
    pub atoms_every: u64,
    pub eval_episodes: usize,
    pub rms_decay: f64,
    pub rms_eps: f64,
    pub max_grad_norm: f64,
    pub env: EnvConfig,
    pub arch: NetworkArch,
    pub atoms: AtomsSettings,
    /// Skip the ATOMs pipeline at measurements (evaluation still runs).
    pub measure_atoms: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 7e-4,
            gamma: 0.99,
            entropy_coef: 0.01,
            value_coef: 0.25,
            n_envs: 8,
            n_steps: 5,
            total_steps: 500_000,
            seed: 0,
            variant: GameVariant::V0,
            eval_every: 50_000,
            atoms_every: 50_000,
            eval_episodes: 10,
            rms_decay: 0.99,
            rms_eps: 1e-5,
            max_grad_norm: 0.5,
            env: EnvConfig::default(),
            arch: NetworkArch::default(),
            atoms: AtomsSettings::default(),
            measure_atoms: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let coefs = [self.lr, self.gamma, self.entropy_coef, self.value_coef, self.rms_eps, self.max_grad_norm];
        if coefs.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::Config("coefficients must be finite and non-negative".into()));
        }
        if self.gamma > 1.0 || !(0.0..1.0).contains(&self.rms_decay) {
            return Err(Error::Config("gamma must be <= 1 and rms_decay in [0, 1)".into()));
        }
        if self.n_envs == 0 || self.n_steps == 0 {
            return Err(Error::Config("n_envs and n_steps must be at least 1".into()));
        }
        if self.eval_every == 0 || self.atoms_every == 0 {
            return Err(Error::Config("measurement cadences must be positive".into()));
        }
        if self.arch.n_actions != 3 {
            return Err(Error::Config("the game has exactly 3 actions".into()));
        }
        self.arch.validate()?;
        self.env_config().validate()?;
        self.atoms.validate()
    }

    /// The environment configuration with this run's variant.
    pub fn env_config(&self) -> EnvConfig {
        EnvConfig { variant: self.variant, seed: self.seed, ..self.env.clone() }
    }

    pub fn steps_per_update(&self) -> u64 {
        (self.n_envs * self.n_steps) as u64
    }

    pub fn n_updates(&self) -> u64 {
        self.total_steps.div_ceil(self.steps_per_update())
    }
}
