use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::agent::{choose, log_softmax, PolicyMode};
use crate::env::{Action, EnvConfig, EnvState, GameVariant, Observation, PongEnv};
use crate::error::Result;
use crate::net::{ForwardTrace, Network};
use crate::scalar::Scalar;
use crate::seed::derive_seed;

/// Independent games stepped in lock-step, reset automatically when done.
#[derive(Clone, Debug)]
pub struct VecEnv {
    pub envs: Vec<PongEnv>,
    /// Reward accumulated in the running game of each environment.
    pub running_scores: Vec<f64>,
}

/// A finished game.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeStats {
    pub score: f64,
    pub frames: u64,
}

/// Serializable snapshot of a [`VecEnv`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VecEnvSnapshot {
    pub histories: Vec<Vec<EnvState>>,
    pub running_scores: Vec<f64>,
}

impl VecEnv {
    pub fn new(variant: GameVariant, config: &EnvConfig, n: usize, seed: u64) -> Result<Self> {
        let envs = (0..n)
            .map(|i| PongEnv::new(variant, config, derive_seed(seed, i as u64)))
            .collect::<Result<Vec<_>>>()?;
        Ok(VecEnv { envs, running_scores: vec![0.0; n] })
    }

    pub fn len(&self) -> usize {
        self.envs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.envs.is_empty()
    }

    pub fn observations(&self) -> Vec<Observation> {
        self.envs.iter().map(PongEnv::observation).collect()
    }

    /// Steps every environment; returns `(rewards, dones, finished games)`.
    pub fn step(&mut self, actions: &[Action]) -> Result<(Vec<f64>, Vec<bool>, Vec<EpisodeStats>)> {
        let mut rewards = Vec::with_capacity(self.len());
        let mut dones = Vec::with_capacity(self.len());
        let mut finished = Vec::new();
        for ((env, &a), running) in self.envs.iter_mut().zip(actions).zip(&mut self.running_scores) {
            let r = env.step(a)?;
            *running += r.reward as f64;
            rewards.push(r.reward as f64);
            dones.push(r.done);
            if r.done {
                finished.push(EpisodeStats { score: *running, frames: env.state.frame_index });
                *running = 0.0;
                env.reset();
            }
        }
        Ok((rewards, dones, finished))
    }

    pub fn snapshot(&self) -> VecEnvSnapshot {
        VecEnvSnapshot {
            histories: self.envs.iter().map(PongEnv::history).collect(),
            running_scores: self.running_scores.clone(),
        }
    }

    pub fn restore(snapshot: VecEnvSnapshot) -> Self {
        VecEnv {
            envs: snapshot.histories.into_iter().map(PongEnv::from_history).collect(),
            running_scores: snapshot.running_scores,
        }
    }
}

/// Transitions of `n_envs` environments over `n_steps` steps, stored
/// step-major: index `t * n_envs + e`.
#[derive(Clone, Debug)]
pub struct RolloutBatch<T> {
    pub n_envs: usize,
    pub n_steps: usize,
    pub observations: Vec<Observation>,
    pub actions: Vec<usize>,
    pub rewards: Vec<f64>,
    pub dones: Vec<bool>,
    pub values: Vec<T>,
    pub log_probs: Vec<T>,
    /// Value estimate of each environment's observation after the last step.
    pub bootstrap: Vec<T>,
    /// Forward traces of every transition, reused by the update.
    pub traces: Vec<ForwardTrace<T>>,
    pub finished: Vec<EpisodeStats>,
}

impl<T> RolloutBatch<T> {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

/// Plays `n_steps` sampled actions in every environment.
pub fn collect_rollout<T: Scalar>(
    envs: &mut VecEnv,
    net: &Network<T>,
    n_steps: usize,
    rng: &mut ChaCha8Rng,
) -> Result<RolloutBatch<T>> {
    let n = envs.len();
    let mut batch = RolloutBatch {
        n_envs: n,
        n_steps,
        observations: Vec::with_capacity(n * n_steps),
        actions: Vec::with_capacity(n * n_steps),
        rewards: Vec::with_capacity(n * n_steps),
        dones: Vec::with_capacity(n * n_steps),
        values: Vec::with_capacity(n * n_steps),
        log_probs: Vec::with_capacity(n * n_steps),
        bootstrap: Vec::with_capacity(n),
        traces: Vec::with_capacity(n * n_steps),
        finished: Vec::new(),
    };
    for _ in 0..n_steps {
        let obs = envs.observations();
        let refs: Vec<&Observation> = obs.iter().collect();
        let traces = net.forward_batch(&refs, true)?;
        let mut actions = Vec::with_capacity(n);
        for t in &traces {
            let a = choose(&t.logits, PolicyMode::Sampled, rng);
            batch.log_probs.push(log_softmax(&t.logits)[a]);
            batch.values.push(t.value);
            batch.actions.push(a);
            actions.push(Action::from_index(a).expect("three logits"));
        }
        let (rewards, dones, finished) = envs.step(&actions)?;
        batch.rewards.extend(rewards);
        batch.dones.extend(dones);
        batch.finished.extend(finished);
        batch.observations.extend(obs);
        batch.traces.extend(traces);
    }
    let obs = envs.observations();
    let refs: Vec<&Observation> = obs.iter().collect();
    batch.bootstrap = net.forward_batch(&refs, true)?.into_iter().map(|t| t.value).collect();
    Ok(batch)
}
