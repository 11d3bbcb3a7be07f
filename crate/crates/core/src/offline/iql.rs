use ndarray::{Array1, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::masa::{Critic, CriticMode, Policy, Structure};
use crate::net::{Activation, AdamState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IqlConfig {
    /// Expectile τ of the value regression.
    pub expectile: f64,
    /// Advantage temperature β of the policy extraction.
    pub beta: f64,
    pub gamma: f64,
    /// Soft update rate of the target Q networks.
    pub target_update_rate: f64,
    /// Upper bound on exp(β·advantage).
    pub weight_clamp: f64,
}

impl Default for IqlConfig {
    fn default() -> Self {
        Self {
            expectile: 0.7,
            beta: 3.0,
            gamma: 0.99,
            target_update_rate: 0.005,
            weight_clamp: 100.0,
        }
    }
}

impl IqlConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.expectile > 0.5 && self.expectile < 1.0) {
            return Err(Error::config("iql.expectile", format!("must be in (0.5, 1), got {}", self.expectile)));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(Error::config("iql.beta", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::config("iql.gamma", "must be in [0, 1]"));
        }
        if !(self.target_update_rate > 0.0 && self.target_update_rate <= 1.0) {
            return Err(Error::config("iql.target_update_rate", "must be in (0, 1]"));
        }
        if !(self.weight_clamp.is_finite() && self.weight_clamp >= 1.0) {
            return Err(Error::config("iql.weight_clamp", "must be at least 1"));
        }
        Ok(())
    }
}

/// |τ − 1(u < 0)| · u²
pub fn expectile_loss(u: f64, tau: f64) -> f64 {
    let w = if u < 0.0 { 1.0 - tau } else { tau };
    w * u * u
}

/// min(exp(β · advantage), clamp)
pub fn awr_weight(advantage: f64, beta: f64, clamp: f64) -> f64 {
    (beta * advantage).exp().min(clamp)
}

/// r + γ(1 − terminal)·V(o′)
pub fn bellman_target(rewards: ArrayView1<f64>, terminal: ArrayView1<f64>, v_next: ArrayView1<f64>, gamma: f64) -> Array1<f64> {
    ndarray::Zip::from(rewards)
        .and(terminal)
        .and(v_next)
        .map_collect(|r, d, v| r + gamma * (1.0 - d) * v)
}

/// Twin Q networks with their targets and the optimizers of all three parts.
#[derive(Debug, Clone)]
pub struct IqlState {
    pub q: [Critic; 2],
    pub q_target: [Critic; 2],
    adam_q: [AdamState; 2],
    adam_v: AdamState,
    adam_pi: AdamState,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct IqlLosses {
    pub value: f64,
    pub q: f64,
    pub policy: f64,
}

/// Minibatch of normalized observations.
pub struct IqlBatch<'a> {
    pub obs: ArrayView2<'a, f64>,
    pub actions: ArrayView2<'a, f64>,
    pub rewards: ArrayView1<'a, f64>,
    pub next_obs: ArrayView2<'a, f64>,
    pub terminal: ArrayView1<'a, f64>,
}

impl IqlState {
    #[allow(clippy::too_many_arguments)]
    pub fn new(structure: &Structure, obs_width: usize, act_width: usize, hidden: &[usize], activation: Activation, seeds: [u64; 2], policy: &Policy, value: &Critic) -> Result<Self> {
        let make = |seed| Critic::new(structure.clone(), CriticMode::Q, obs_width, act_width, hidden, activation, seed);
        let q = [make(seeds[0])?, make(seeds[1])?];
        let adam_q = [AdamState::new(&q[0].slice_sizes()), AdamState::new(&q[1].slice_sizes())];
        Ok(Self {
            q_target: q.clone(),
            q,
            adam_q,
            adam_v: AdamState::new(&value.slice_sizes()),
            adam_pi: AdamState::new(&policy.slice_sizes()),
        })
    }

    fn target_q(&self, obs: ArrayView2<f64>, actions: ArrayView2<f64>) -> Result<Array1<f64>> {
        let a = self.q_target[0].q(obs, actions)?.0;
        let b = self.q_target[1].q(obs, actions)?.0;
        Ok(ndarray::Zip::from(&a).and(&b).map_collect(|x, y| x.min(*y)))
    }
}

fn finite(context: &'static str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite {
            context,
            detail: format!("{v}"),
        })
    }
}

/// One IQL step: expectile value regression, advantage-weighted policy
/// extraction, Bellman regression of both Q networks, then the target update.
/// Returns the losses measured before the respective steps.
pub fn iql_update(policy: &mut Policy, value: &mut Critic, state: &mut IqlState, batch: &IqlBatch, cfg: &IqlConfig, lr: f64) -> Result<IqlLosses> {
    let b = batch.obs.nrows();
    if b == 0 {
        return Err(Error::EmptyBatch);
    }
    let inv = 1.0 / b as f64;
    let q_t = state.target_q(batch.obs, batch.actions)?;

    // value: expectile of Q_target − V
    let (v, vtape) = value.value(batch.obs)?;
    let mut v_loss = 0.0;
    let mut dv = Array1::zeros(b);
    for k in 0..b {
        let u = q_t[k] - v[k];
        v_loss += expectile_loss(u, cfg.expectile) * inv;
        let w = if u < 0.0 { 1.0 - cfg.expectile } else { cfg.expectile };
        dv[k] = -2.0 * w * u * inv;
    }
    finite("iql value loss", v_loss)?;
    let g = value.backward(&vtape, dv.view())?;
    state.adam_v.step(&mut value.slices_mut(), &g.slices(), lr);

    // policy: advantage-weighted log-likelihood with the updated V
    let (v_new, _) = value.value(batch.obs)?;
    let weights: Vec<f64> = (0..b).map(|k| awr_weight(q_t[k] - v_new[k], cfg.beta, cfg.weight_clamp)).collect();
    let (mean, ptape) = policy.mean(batch.obs)?;
    let lp = policy.log_prob_rows(mean.view(), batch.actions);
    let pi_loss = finite("iql policy loss", -(0..b).map(|k| weights[k] * lp[k]).sum::<f64>() * inv)?;
    let lp_w: Vec<f64> = weights.iter().map(|w| -w * inv).collect();
    let pg = policy.log_prob_backward(&ptape, mean.view(), batch.actions, &lp_w)?;
    state.adam_pi.step(&mut policy.slices_mut(), &pg.slices(), lr);

    // Q: squared Bellman error towards r + γ(1 − terminal)V(o′)
    let (v_next, _) = value.value(batch.next_obs)?;
    let y = bellman_target(batch.rewards, batch.terminal, v_next.view(), cfg.gamma);
    let mut q_loss = 0.0;
    for (net, adam) in state.q.iter_mut().zip(state.adam_q.iter_mut()) {
        let (q, qtape) = net.q(batch.obs, batch.actions)?;
        let err = &q - &y;
        q_loss += err.dot(&err) * inv;
        let g = net.backward(&qtape, (&err * (2.0 * inv)).view())?;
        adam.step(&mut net.slices_mut(), &g.slices(), lr);
    }
    finite("iql q loss", q_loss)?;

    let rate = cfg.target_update_rate;
    for (target, online) in state.q_target.iter_mut().zip(&state.q) {
        for (t, o) in target.slices_mut().into_iter().zip(online.slices()) {
            for (x, y) in t.iter_mut().zip(o) {
                *x += rate * (y - *x);
            }
        }
    }
    Ok(IqlLosses {
        value: v_loss,
        q: q_loss,
        policy: pi_loss,
    })
}
