use ndarray::ArrayView2;

use crate::error::{Error, Result};
use crate::masa::Policy;
use crate::net::AdamState;

/// Negative mean log-likelihood of `actions`.
pub fn bc_loss(policy: &Policy, obs: ArrayView2<f64>, actions: ArrayView2<f64>) -> Result<f64> {
    if obs.nrows() == 0 {
        return Err(Error::EmptyBatch);
    }
    let (mean, _) = policy.mean(obs)?;
    Ok(-policy.log_prob_rows(mean.view(), actions).mean().expect("non-empty"))
}

/// One behaviour-cloning step; returns the loss before the step.
pub fn bc_update(policy: &mut Policy, adam: &mut AdamState, obs: ArrayView2<f64>, actions: ArrayView2<f64>, lr: f64) -> Result<f64> {
    let b = obs.nrows();
    if b == 0 {
        return Err(Error::EmptyBatch);
    }
    let (mean, tape) = policy.mean(obs)?;
    let loss = -policy.log_prob_rows(mean.view(), actions).sum() / b as f64;
    if !loss.is_finite() {
        return Err(Error::NonFinite {
            context: "bc loss",
            detail: format!("{loss}"),
        });
    }
    let grads = policy.log_prob_backward(&tape, mean.view(), actions, &vec![-1.0 / b as f64; b])?;
    let g = grads.slices();
    adam.step(&mut policy.slices_mut(), &g, lr);
    Ok(loss)
}
