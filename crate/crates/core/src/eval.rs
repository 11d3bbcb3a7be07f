//! Deterministic policy evaluation.

use crate::envs::EnvConfig;
use crate::error::{Error, Result};
use crate::seeding::{stream, streams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalReport {
    pub episodes: usize,
    pub success_rate: f64,
    pub mean_return: f64,
}

/// Runs `episodes` episodes with `act` choosing the action for each raw
/// observation. Resets draw from the evaluation stream of `seed`.
pub fn evaluate(env: &EnvConfig, episodes: usize, seed: u64, mut act: impl FnMut(&[f64]) -> Result<Vec<f64>>) -> Result<EvalReport> {
    if episodes == 0 {
        return Err(Error::config("episodes", "must be at least 1"));
    }
    let mut e = env.build()?;
    let mut rng = stream(seed, streams::EVAL);
    let mut successes = 0usize;
    let mut total = 0.0;
    for _ in 0..episodes {
        let mut obs = e.reset(&mut rng);
        loop {
            let step = e.step(&act(&obs)?)?;
            total += step.reward;
            if step.done() {
                successes += usize::from(step.success);
                break;
            }
            obs = step.obs;
        }
    }
    Ok(EvalReport {
        episodes,
        success_rate: successes as f64 / episodes as f64,
        mean_return: total / episodes as f64,
    })
}
