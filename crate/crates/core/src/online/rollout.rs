use ndarray::{Array1, Array2};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::variant::Agent;
use crate::envs::{Env, EnvConfig};
use crate::error::{Error, Result};
use crate::net::log_prob;
use crate::seeding::{stream, streams};

/// One finished episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeRecord {
    pub ret: f64,
    pub len: usize,
    pub success: bool,
}

/// A set of independent environment copies, each with its own RNG stream.
pub struct VecEnv {
    envs: Vec<Box<dyn Env>>,
    rngs: Vec<ChaCha8Rng>,
    obs: Vec<Vec<f64>>,
    ep_return: Vec<f64>,
    ep_len: Vec<usize>,
}

impl VecEnv {
    pub fn new(cfg: &EnvConfig, actors: usize, seed: u64) -> Result<Self> {
        if actors == 0 {
            return Err(Error::config("actors", "must be at least 1"));
        }
        let mut envs = Vec::with_capacity(actors);
        let mut rngs = Vec::with_capacity(actors);
        let mut obs = Vec::with_capacity(actors);
        for k in 0..actors {
            let mut env = cfg.build()?;
            let mut rng = stream(seed, streams::ACTOR_BASE + k as u64);
            obs.push(env.reset(&mut rng));
            envs.push(env);
            rngs.push(rng);
        }
        Ok(Self {
            envs,
            rngs,
            obs,
            ep_return: vec![0.0; actors],
            ep_len: vec![0; actors],
        })
    }

    pub fn actors(&self) -> usize {
        self.envs.len()
    }

    pub fn obs_width(&self) -> usize {
        self.obs[0].len()
    }

    fn obs_rows(&self) -> Array2<f64> {
        let w = self.obs_width();
        Array2::from_shape_vec((self.actors(), w), self.obs.concat()).expect("rectangular")
    }
}

/// Transitions of `horizon` steps from every actor; row `t·actors + k`.
#[derive(Debug, Clone)]
pub struct RolloutBatch {
    pub actors: usize,
    pub horizon: usize,
    /// Raw observations.
    pub obs: Array2<f64>,
    /// Observations normalized with the statistics used while acting.
    pub norm_obs: Array2<f64>,
    pub actions: Array2<f64>,
    pub log_probs: Vec<f64>,
    pub rewards: Vec<f64>,
    /// Critic values in return units.
    pub values: Vec<f64>,
    /// Bootstrap value after each step (0 on termination).
    pub next_values: Vec<f64>,
    pub terminated: Vec<bool>,
    pub truncated: Vec<bool>,
}

impl RolloutBatch {
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn done(&self, row: usize) -> bool {
        self.terminated[row] || self.truncated[row]
    }

    /// Indices of actor k's rows in time order.
    pub fn actor_rows(&self, k: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.horizon).map(move |t| t * self.actors + k)
    }
}

/// Runs the stochastic policy for `horizon` steps in every actor.
///
/// With `bootstrap_truncation`, a horizon cut bootstraps from the critic's
/// value of the final observation; otherwise it is treated as terminal.
pub fn collect_rollouts(agent: &Agent, venv: &mut VecEnv, horizon: usize, bootstrap_truncation: bool) -> Result<(RolloutBatch, Vec<EpisodeRecord>)> {
    let actors = venv.actors();
    let obs_w = venv.obs_width();
    let act_w = agent.policy.act_width();
    let rows = horizon * actors;
    let mut batch = RolloutBatch {
        actors,
        horizon,
        obs: Array2::zeros((rows, obs_w)),
        norm_obs: Array2::zeros((rows, obs_w)),
        actions: Array2::zeros((rows, act_w)),
        log_probs: vec![0.0; rows],
        rewards: vec![0.0; rows],
        values: vec![0.0; rows],
        next_values: vec![0.0; rows],
        terminated: vec![false; rows],
        truncated: vec![false; rows],
    };
    let mut episodes = Vec::new();
    let log_std = agent.policy.flat_log_std();
    let std: Vec<f64> = log_std.iter().map(|l| l.exp()).collect();
    // bootstrap values of truncated steps, filled per time step
    let mut trunc_value = vec![0.0; rows];

    for t in 0..horizon {
        let raw = venv.obs_rows();
        let norm = agent.obs_norm.normalize(raw.view());
        let (mean, _) = agent.policy.mean(norm.view())?;
        let values = agent.values(norm.view())?;
        let mut final_obs: Vec<(usize, Vec<f64>)> = Vec::new();
        for k in 0..actors {
            let row = t * actors + k;
            let m = mean.row(k).to_vec();
            let rng = &mut venv.rngs[k];
            let action: Vec<f64> = m
                .iter()
                .zip(&std)
                .map(|(&mu, &s)| {
                    let eps: f64 = StandardNormal.sample(rng);
                    mu + s * eps
                })
                .collect();
            batch.log_probs[row] = log_prob(&m, &log_std, &action);
            batch.values[row] = values[k];
            batch.obs.row_mut(row).assign(&raw.row(k));
            batch.norm_obs.row_mut(row).assign(&norm.row(k));
            batch.actions.row_mut(row).assign(&Array1::from(action.clone()));

            let step = venv.envs[k].step(&action)?;
            if !step.reward.is_finite() {
                return Err(Error::NonFinite {
                    context: "environment reward",
                    detail: format!("actor {k} step {t}"),
                });
            }
            batch.rewards[row] = step.reward;
            batch.terminated[row] = step.terminated;
            batch.truncated[row] = step.truncated && !step.terminated;
            venv.ep_return[k] += step.reward;
            venv.ep_len[k] += 1;
            if step.done() {
                episodes.push(EpisodeRecord {
                    ret: venv.ep_return[k],
                    len: venv.ep_len[k],
                    success: step.success,
                });
                venv.ep_return[k] = 0.0;
                venv.ep_len[k] = 0;
                if batch.truncated[row] && bootstrap_truncation {
                    final_obs.push((row, step.obs));
                }
                venv.obs[k] = venv.envs[k].reset(&mut venv.rngs[k]);
            } else {
                venv.obs[k] = step.obs;
            }
        }
        if !final_obs.is_empty() {
            let fin = Array2::from_shape_vec((final_obs.len(), obs_w), final_obs.iter().flat_map(|(_, o)| o.clone()).collect())
                .expect("rectangular");
            let v = agent.values(agent.obs_norm.normalize(fin.view()).view())?;
            for ((row, _), value) in final_obs.iter().zip(v) {
                trunc_value[*row] = value;
            }
        }
    }

    let last = venv.obs_rows();
    let last_values = agent.values(agent.obs_norm.normalize(last.view()).view())?;
    for k in 0..actors {
        for t in 0..horizon {
            let row = t * actors + k;
            batch.next_values[row] = if batch.terminated[row] {
                0.0
            } else if batch.truncated[row] {
                trunc_value[row]
            } else if t + 1 < horizon {
                batch.values[row + actors]
            } else {
                last_values[k]
            };
        }
    }
    Ok((batch, episodes))
}
