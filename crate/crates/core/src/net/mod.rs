//! Dense networks with analytic gradients, Gaussian heads and Adam.

mod adam;
mod checkpoint;
mod gaussian;
mod mlp;

pub use adam::{clip_global_norm, global_norm, AdamConfig, AdamState};
pub use checkpoint::{Checkpoint, Record, MAGIC as CHECKPOINT_MAGIC, VERSION as CHECKPOINT_VERSION};
pub use gaussian::{clamp_log_std, entropy, log_prob, log_prob_grads, GaussianHead, HALF_LN_2PI, LOG_STD_BOUNDS};
pub use mlp::{Activation, Layer, NetArch, NetParams, Tape};

/// Same as [`gaussian::log_prob`] on a [`GaussianHead`], clamping applied.
pub fn gaussian_logprob(head: &GaussianHead, action: &[f64]) -> f64 {
    head.log_prob(action)
}
