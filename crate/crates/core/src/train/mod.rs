//! Synchronous advantage actor-critic training.

mod a2c;
mod config;
mod returns;
mod rollout;
mod trainer;

pub use a2c::{a2c_loss, a2c_update, clip_grad_norm, LossCoefficients, Losses, RmsProp};
pub use config::TrainConfig;
pub use returns::compute_returns_advantages;
pub use rollout::{collect_rollout, EpisodeStats, RolloutBatch, VecEnv, VecEnvSnapshot};
pub use trainer::*;
