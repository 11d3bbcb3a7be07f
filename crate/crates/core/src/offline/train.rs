use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::augment::augment_symmetric;
use super::bc::bc_update;
use super::dataset::Dataset;
use super::iql::{iql_update, IqlBatch, IqlConfig, IqlLosses, IqlState};
use crate::envs::EnvConfig;
use crate::error::{Error, Result};
use crate::eval::{evaluate, EvalReport};
use crate::metrics::{MetricsRow, Phase};
use crate::net::AdamState;
use crate::online::{Agent, NetConfig, Variant};
use crate::seeding::{derive_seed, stream, streams};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OfflineAlgo {
    #[default]
    Bc,
    Iql,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OfflineConfig {
    /// Set from the run config's `algorithm`, not read from its `offline` section.
    #[serde(skip)]
    pub algo: OfflineAlgo,
    pub gradient_steps: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Gradient steps between logged rows.
    pub log_every: usize,
    pub normalize_input: bool,
    pub iql: IqlConfig,
}

impl Default for OfflineConfig {
    fn default() -> Self {
        Self {
            algo: OfflineAlgo::Bc,
            gradient_steps: 5000,
            batch_size: 256,
            learning_rate: 3e-4,
            log_every: 500,
            normalize_input: true,
            iql: IqlConfig::default(),
        }
    }
}

impl OfflineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.gradient_steps == 0 {
            return Err(Error::config("offline.gradient_steps", "must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("offline.batch_size", "must be at least 1"));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::config("offline.learning_rate", "must be positive"));
        }
        if self.log_every == 0 {
            return Err(Error::config("offline.log_every", "must be at least 1"));
        }
        self.iql.validate()
    }
}

#[derive(Debug, Clone)]
pub struct OfflineOutcome {
    pub agent: Agent,
    pub rows: Vec<MetricsRow>,
    pub eval: Option<EvalReport>,
    /// Transitions actually trained on (after augmentation for SASA).
    pub train_size: usize,
}

/// Dataset arrays with observations normalized by the agent.
struct Arrays {
    obs: Array2<f64>,
    actions: Array2<f64>,
    rewards: Array1<f64>,
    next_obs: Array2<f64>,
    terminal: Array1<f64>,
}

impl Arrays {
    fn new(agent: &Agent, ds: &Dataset) -> Self {
        let rows = |f: &dyn Fn(&super::Transition) -> &Vec<f64>, w: usize| {
            Array2::from_shape_vec((ds.len(), w), ds.transitions.iter().flat_map(|t| f(t).iter().copied()).collect()).expect("validated widths")
        };
        let (ow, aw) = (ds.spec().obs_width(), ds.spec().act_width());
        Self {
            obs: agent.obs_norm.normalize(rows(&|t| &t.obs, ow).view()),
            actions: rows(&|t| &t.action, aw),
            rewards: ds.transitions.iter().map(|t| t.reward).collect(),
            next_obs: agent.obs_norm.normalize(rows(&|t| &t.next_obs, ow).view()),
            terminal: ds.transitions.iter().map(|t| f64::from(u8::from(t.terminal))).collect(),
        }
    }
}

/// Builds the agent for `variant` with its observation statistics fitted to the
/// training data. SASA trains the monolithic networks on augmented data.
pub fn prepare_offline(ds: &Dataset, variant: Variant, nets: &NetConfig, normalize_input: bool, seed: u64) -> Result<(Agent, Dataset)> {
    let data = if variant == Variant::Sasa { augment_symmetric(ds)? } else { ds.clone() };
    if data.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let mut agent = Agent::new(variant, ds.spec(), nets, normalize_input, false, seed)?;
    agent.obs_norm.update(data.observations().view());
    Ok((agent, data))
}

/// Trains a policy from `ds` with BC or IQL, logging every `log_every` steps.
#[allow(clippy::too_many_arguments)]
pub fn train_offline(
    ds: &Dataset,
    variant: Variant,
    nets: &NetConfig,
    cfg: &OfflineConfig,
    eval_episodes: usize,
    seed: u64,
    run_id: &str,
    mut on_row: impl FnMut(&MetricsRow) -> Result<()>,
) -> Result<OfflineOutcome> {
    cfg.validate()?;
    let (mut agent, data) = prepare_offline(ds, variant, nets, cfg.normalize_input, seed)?;
    let arrays = Arrays::new(&agent, &data);
    let n = data.len();
    let mut rng = stream(seed, streams::UPDATE);
    let mut rows = Vec::new();

    let mut adam = AdamState::new(&agent.policy.slice_sizes());
    let mut iql = match cfg.algo {
        OfflineAlgo::Iql => {
            let q_seed = derive_seed(seed, streams::Q_INIT);
            Some(IqlState::new(
                agent.critic.structure(),
                ds.spec().obs_width(),
                ds.spec().act_width(),
                &nets.critic_hidden,
                nets.activation,
                [derive_seed(q_seed, 0), derive_seed(q_seed, 1)],
                &agent.policy,
                &agent.critic,
            )?)
        }
        OfflineAlgo::Bc => None,
    };

    let mut acc = IqlLosses::default();
    let mut since = 0usize;
    for step in 1..=cfg.gradient_steps {
        let idx: Vec<usize> = (0..cfg.batch_size).map(|_| rng.random_range(0..n)).collect();
        let obs = arrays.obs.select(Axis(0), &idx);
        let actions = arrays.actions.select(Axis(0), &idx);
        match iql.as_mut() {
            None => acc.policy += bc_update(&mut agent.policy, &mut adam, obs.view(), actions.view(), cfg.learning_rate)?,
            Some(state) => {
                let rewards = arrays.rewards.select(Axis(0), &idx);
                let next_obs = arrays.next_obs.select(Axis(0), &idx);
                let terminal = arrays.terminal.select(Axis(0), &idx);
                let batch = IqlBatch {
                    obs: obs.view(),
                    actions: actions.view(),
                    rewards: rewards.view(),
                    next_obs: next_obs.view(),
                    terminal: terminal.view(),
                };
                let l = iql_update(&mut agent.policy, &mut agent.critic, state, &batch, &cfg.iql, cfg.learning_rate)?;
                acc.policy += l.policy;
                acc.value += l.value;
                acc.q += l.q;
            }
        }
        since += 1;
        if step % cfg.log_every == 0 || step == cfg.gradient_steps {
            let k = since as f64;
            let mut row = MetricsRow::new(run_id, seed, Phase::Train, step as u64);
            row.policy_loss = Some(acc.policy / k);
            if iql.is_some() {
                row.value_loss = Some(acc.value / k);
                row.q_loss = Some(acc.q / k);
            }
            on_row(&row)?;
            rows.push(row);
            acc = IqlLosses::default();
            since = 0;
        }
    }

    let eval = if eval_episodes > 0 {
        let report = evaluate_agent(&agent, &ds.meta.env, eval_episodes, seed)?;
        let mut row = MetricsRow::new(run_id, seed, Phase::Eval, cfg.gradient_steps as u64);
        row.episodic_return_mean = Some(report.mean_return);
        row.success_rate = Some(report.success_rate);
        on_row(&row)?;
        rows.push(row);
        Some(report)
    } else {
        None
    };
    Ok(OfflineOutcome { agent, rows, eval, train_size: n })
}

/// Deterministic (mean-action) evaluation of an agent.
pub fn evaluate_agent(agent: &Agent, env: &EnvConfig, episodes: usize, seed: u64) -> Result<EvalReport> {
    evaluate(env, episodes, seed, |o| agent.act_mean(o))
}

/// Mean log-likelihood of the dataset actions under the agent's policy.
pub fn mean_log_likelihood(agent: &Agent, ds: &Dataset) -> Result<f64> {
    let arrays = Arrays::new(agent, ds);
    let (mean, _) = agent.policy.mean(arrays.obs.view())?;
    Ok(agent.policy.log_prob_rows(mean.view(), arrays.actions.view()).mean().unwrap_or(f64::NAN))
}
