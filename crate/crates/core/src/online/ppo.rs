use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::gae::{compute_gae, normalize_advantages};
use super::rollout::RolloutBatch;
use super::variant::{Agent, Variant};
use crate::error::{Error, Result};
use crate::masa::{CriticGrads, PolicyGrads, PolicyTape};
use crate::net::{clip_global_norm, AdamState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PpoConfig {
    pub gamma: f64,
    /// GAE λ.
    pub tau: f64,
    pub e_clip: f64,
    pub entropy_coef: f64,
    pub critic_coef: f64,
    pub learning_rate: f64,
    pub mini_epochs: usize,
    pub minibatch_size: usize,
    pub kl_threshold: f64,
    pub grad_norm_clip: f64,
    pub value_bootstrap: bool,
    pub normalize_input: bool,
    pub normalize_value: bool,
    pub normalize_advantage: bool,
    /// Weights of the SASA policy and value symmetry losses.
    pub sym_loss_weights: [f64; 2],
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            tau: 0.95,
            e_clip: 0.2,
            entropy_coef: 0.0,
            critic_coef: 2.0,
            learning_rate: 3e-4,
            mini_epochs: 5,
            minibatch_size: 512,
            kl_threshold: 0.0008,
            grad_norm_clip: 1.0,
            value_bootstrap: true,
            normalize_input: true,
            normalize_value: true,
            normalize_advantage: true,
            sym_loss_weights: [1.0, 1.0],
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::config(format!("ppo.{name}"), format!("must be in [0, 1], got {v}")))
            }
        };
        unit("gamma", self.gamma)?;
        unit("tau", self.tau)?;
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::config(format!("ppo.{name}"), format!("must be positive, got {v}")))
            }
        };
        positive("e_clip", self.e_clip)?;
        positive("learning_rate", self.learning_rate)?;
        positive("kl_threshold", self.kl_threshold)?;
        positive("grad_norm_clip", self.grad_norm_clip)?;
        if !(self.critic_coef.is_finite() && self.critic_coef >= 0.0) {
            return Err(Error::config("ppo.critic_coef", "must be non-negative"));
        }
        if !(self.entropy_coef.is_finite() && self.entropy_coef >= 0.0) {
            return Err(Error::config("ppo.entropy_coef", "must be non-negative"));
        }
        if self.sym_loss_weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::config("ppo.sym_loss_weights", "must be non-negative"));
        }
        if self.mini_epochs == 0 {
            return Err(Error::config("ppo.mini_epochs", "must be at least 1"));
        }
        if self.minibatch_size == 0 {
            return Err(Error::config("ppo.minibatch_size", "must be at least 1"));
        }
        Ok(())
    }
}

/// Averages over the minibatches of one update.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PpoStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    /// Approximate KL of the last completed epoch.
    pub approx_kl: f64,
    pub clip_fraction: f64,
    pub epochs_completed: usize,
    pub early_stopped: bool,
    pub sym_policy_loss: f64,
    pub sym_value_loss: f64,
    /// max |ratio − 1| on the first minibatch (0 when data is on-policy).
    pub first_ratio_deviation: f64,
    pub grad_steps: usize,
}

/// Optimizer over the concatenated policy and critic parameters.
#[derive(Debug, Clone)]
pub struct PpoOptimizer {
    pub adam: AdamState,
}

impl PpoOptimizer {
    pub fn new(agent: &Agent) -> Self {
        let mut sizes = agent.policy.slice_sizes();
        sizes.extend(agent.critic.slice_sizes());
        Self { adam: AdamState::new(&sizes) }
    }
}

/// SASA symmetry losses on raw observations for transform `i`:
/// mean ‖T_i(A(o)) − A(T_i(o))‖₂ and mean |V(o) − V(T_i(o))| (normalized value units).
pub fn sasa_aux_losses(agent: &Agent, raw_obs: ndarray::ArrayView2<f64>, i: usize) -> Result<(f64, f64)> {
    let set = &agent.set;
    let norm = agent.obs_norm.normalize(raw_obs);
    let norm_t = agent.obs_norm.normalize(set.obs(i).apply_rows(raw_obs).view());
    let (a, _) = agent.policy.mean(norm.view())?;
    let (a_t, _) = agent.policy.mean(norm_t.view())?;
    let diff = set.act(i).apply_rows(a.view()) - &a_t;
    let b = raw_obs.nrows() as f64;
    let pol = diff.rows().into_iter().map(|r| r.dot(&r).sqrt()).sum::<f64>() / b;
    let (v, _) = agent.critic.value(norm.view())?;
    let (v_t, _) = agent.critic.value(norm_t.view())?;
    let val = (&v - &v_t).mapv(f64::abs).sum() / b;
    Ok((pol, val))
}

/// min(ρA, clip(ρ, 1 ± ε)A) and whether the gradient flows through ρ.
pub fn clipped_surrogate(ratio: f64, advantage: f64, e_clip: f64) -> (f64, bool) {
    let unclipped = ratio * advantage;
    let clipped = ratio.clamp(1.0 - e_clip, 1.0 + e_clip) * advantage;
    if unclipped <= clipped {
        (unclipped, true)
    } else {
        (clipped, false)
    }
}

fn select(rows: &Array2<f64>, idx: &[usize]) -> Array2<f64> {
    rows.select(Axis(0), idx)
}

/// One PPO update (several epochs of minibatch steps) on a rollout batch.
pub fn ppo_update(agent: &mut Agent, opt: &mut PpoOptimizer, batch: &RolloutBatch, cfg: &PpoConfig, rng: &mut ChaCha8Rng) -> Result<PpoStats> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let n = batch.len();
    let mut advantages = vec![0.0; n];
    let mut returns = vec![0.0; n];
    for k in 0..batch.actors {
        let rows: Vec<usize> = batch.actor_rows(k).collect();
        let pick = |v: &Vec<f64>| rows.iter().map(|&r| v[r]).collect::<Vec<f64>>();
        let dones: Vec<bool> = rows.iter().map(|&r| batch.done(r)).collect();
        let (adv, ret) = compute_gae(&pick(&batch.rewards), &pick(&batch.values), &pick(&batch.next_values), &dones, cfg.gamma, cfg.tau);
        for (j, &r) in rows.iter().enumerate() {
            advantages[r] = adv[j];
            returns[r] = ret[j];
        }
    }
    if cfg.normalize_advantage {
        normalize_advantages(&mut advantages);
    }
    if agent.normalize_value {
        agent.value_norm.update_scalars(&returns);
    }
    let targets: Vec<f64> = if agent.normalize_value {
        returns.iter().map(|&r| agent.value_norm.normalize_scalar(r)).collect()
    } else {
        returns
    };

    let sasa = agent.variant == Variant::Sasa && agent.set.n() > 1 && cfg.sym_loss_weights.iter().any(|&w| w > 0.0);
    let mb_size = cfg.minibatch_size.min(n);
    let mut order: Vec<usize> = (0..n).collect();
    let mut stats = PpoStats::default();
    let mut mb_count = 0usize;

    for epoch in 0..cfg.mini_epochs {
        order.shuffle(rng);
        let mut epoch_kl = 0.0;
        let mut epoch_mbs = 0usize;
        for idx in order.chunks(mb_size) {
            let b = idx.len() as f64;
            let obs = select(&batch.norm_obs, idx);
            let acts = select(&batch.actions, idx);
            let (mean, ptape) = agent.policy.mean(obs.view())?;
            let new_lp = agent.policy.log_prob_rows(mean.view(), acts.view());

            let mut lp_weights = vec![0.0; idx.len()];
            let mut surrogate = 0.0;
            let mut clipped = 0usize;
            let mut kl = 0.0;
            for (j, &r) in idx.iter().enumerate() {
                let ratio = (new_lp[j] - batch.log_probs[r]).exp();
                if epoch == 0 && epoch_mbs == 0 {
                    stats.first_ratio_deviation = stats.first_ratio_deviation.max((ratio - 1.0).abs());
                }
                let adv = advantages[r];
                let (obj, active) = clipped_surrogate(ratio, adv, cfg.e_clip);
                surrogate += obj;
                if active {
                    lp_weights[j] = -ratio * adv / b;
                }
                if (ratio - 1.0).abs() > cfg.e_clip {
                    clipped += 1;
                }
                kl += batch.log_probs[r] - new_lp[j];
            }
            let policy_loss = -surrogate / b;
            kl /= b;

            let mut pgrads = agent.policy.log_prob_backward(&ptape, mean.view(), acts.view(), &lp_weights)?;
            let entropy = agent.policy.entropy();
            if cfg.entropy_coef > 0.0 {
                for (g, e) in pgrads.log_std.iter_mut().zip(agent.policy.entropy_grad()) {
                    *g -= cfg.entropy_coef * e;
                }
            }

            let (v, ctape) = agent.critic.value(obs.view())?;
            let tgt = Array1::from(idx.iter().map(|&r| targets[r]).collect::<Vec<f64>>());
            let err = &v - &tgt;
            let value_loss = 0.5 * err.dot(&err) / b;
            let mut cgrads = agent.critic.backward(&ctape, (&err * (cfg.critic_coef / b)).view())?;

            let (mut sym_p, mut sym_v) = (0.0, 0.0);
            if sasa {
                let i = rng.random_range(1..agent.set.n());
                let raw = select(&batch.obs, idx);
                let (sp, sv) = sasa_grads(agent, &raw, &obs, &mean, &ptape, i, cfg.sym_loss_weights, &mut pgrads, &mut cgrads)?;
                sym_p = sp;
                sym_v = sv;
            }

            let total = policy_loss + cfg.critic_coef * value_loss - cfg.entropy_coef * entropy + cfg.sym_loss_weights[0] * sym_p + cfg.sym_loss_weights[1] * sym_v;
            if !total.is_finite() {
                return Err(Error::NonFinite {
                    context: "ppo loss",
                    detail: format!("policy {policy_loss}, value {value_loss}, sym {sym_p}/{sym_v}, epoch {epoch}"),
                });
            }

            {
                let mut grads: Vec<&mut [f64]> = pgrads.slices_mut();
                grads.extend(cgrads.slices_mut());
                clip_global_norm(&mut grads, cfg.grad_norm_clip);
            }
            let grads: Vec<&[f64]> = pgrads.slices().into_iter().chain(cgrads.slices()).collect();
            let mut params: Vec<&mut [f64]> = agent.policy.slices_mut();
            params.extend(agent.critic.slices_mut());
            opt.adam.step(&mut params, &grads, cfg.learning_rate);

            stats.policy_loss += policy_loss;
            stats.value_loss += value_loss;
            stats.entropy += entropy;
            stats.clip_fraction += clipped as f64 / b;
            stats.sym_policy_loss += sym_p;
            stats.sym_value_loss += sym_v;
            epoch_kl += kl;
            epoch_mbs += 1;
            mb_count += 1;
        }
        stats.approx_kl = epoch_kl / epoch_mbs as f64;
        stats.epochs_completed = epoch + 1;
        if stats.approx_kl > cfg.kl_threshold {
            stats.early_stopped = epoch + 1 < cfg.mini_epochs;
            break;
        }
    }
    let m = mb_count as f64;
    stats.policy_loss /= m;
    stats.value_loss /= m;
    stats.entropy /= m;
    stats.clip_fraction /= m;
    stats.sym_policy_loss /= m;
    stats.sym_value_loss /= m;
    stats.grad_steps = mb_count;
    Ok(stats)
}

/// Adds the weighted SASA symmetry-loss gradients; returns the unweighted losses.
#[allow(clippy::too_many_arguments)]
fn sasa_grads(
    agent: &Agent,
    raw: &Array2<f64>,
    obs: &Array2<f64>,
    mean: &Array2<f64>,
    tape: &PolicyTape,
    i: usize,
    weights: [f64; 2],
    pgrads: &mut PolicyGrads,
    cgrads: &mut CriticGrads,
) -> Result<(f64, f64)> {
    let set = &agent.set;
    let b = raw.nrows() as f64;
    let obs_t = agent.obs_norm.normalize(set.obs(i).apply_rows(raw.view()).view());

    // policy: mean_b ‖T_i(A(o_b)) − A(T_i o_b)‖
    let (mean_t, tape_t) = agent.policy.mean(obs_t.view())?;
    let diff = set.act(i).apply_rows(mean.view()) - &mean_t;
    let mut unit = diff.clone();
    let mut sym_p = 0.0;
    for mut row in unit.rows_mut() {
        let norm = row.dot(&row).sqrt();
        sym_p += norm;
        let scale = if norm > 1e-12 { weights[0] / (norm * b) } else { 0.0 };
        row.mapv_inplace(|v| v * scale);
    }
    sym_p /= b;
    let d_mean = set.act(i).apply_transpose_rows(unit.view());
    pgrads.phi.accumulate(&agent.policy.backward_mean(tape, d_mean.view())?);
    pgrads.phi.accumulate(&agent.policy.backward_mean(&tape_t, (-&unit).view())?);

    // value: mean_b |V(o_b) − V(T_i o_b)|
    let (v, vtape) = agent.critic.value(obs.view())?;
    let (v_t, vtape_t) = agent.critic.value(obs_t.view())?;
    let d = &v - &v_t;
    let sym_v = d.mapv(f64::abs).sum() / b;
    let sign = d.mapv(|x| weights[1] * x.signum() * f64::from(u8::from(x != 0.0)) / b);
    cgrads.accumulate(&agent.critic.backward(&vtape, sign.view())?);
    cgrads.accumulate(&agent.critic.backward(&vtape_t, (-&sign).view())?);
    Ok((sym_p, sym_v))
}
