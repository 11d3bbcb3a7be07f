//! PPO with GAE for the SA, SASA, MA and MASA variants.

mod gae;
mod normalizer;
mod ppo;
mod rollout;
mod train;
mod variant;
#[cfg(test)]
mod tests;

pub use gae::{compute_gae, normalize_advantages};
pub use normalizer::{ObsNormalizer, RunningMeanStd};
pub use ppo::{clipped_surrogate, ppo_update, sasa_aux_losses, PpoConfig, PpoOptimizer, PpoStats};
pub use rollout::{collect_rollouts, EpisodeRecord, RolloutBatch, VecEnv};
pub use train::{train_online, OnlineConfig, OnlineOutcome, OnlineSchedule};
pub use variant::{Agent, NetConfig, RawPolicy, Variant};
