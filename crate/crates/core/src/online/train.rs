use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::ppo::{ppo_update, PpoConfig, PpoOptimizer, PpoStats};
use super::rollout::{collect_rollouts, VecEnv};
use super::variant::{Agent, NetConfig, Variant};
use crate::envs::EnvConfig;
use crate::error::{Error, Result};
use crate::eval::{evaluate, EvalReport};
use crate::metrics::{MetricsRow, Phase};
use crate::seeding::{stream, streams};

/// Rollout schedule of an online run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OnlineSchedule {
    pub actors: usize,
    pub horizon: usize,
    pub total_env_steps: u64,
    /// Finished episodes averaged into each logged return / success rate.
    pub episode_window: usize,
}

impl Default for OnlineSchedule {
    fn default() -> Self {
        Self {
            actors: 64,
            horizon: 32,
            total_env_steps: 200_000,
            episode_window: 100,
        }
    }
}

impl OnlineSchedule {
    pub fn validate(&self) -> Result<()> {
        if self.actors == 0 {
            return Err(Error::config("online.actors", "must be at least 1"));
        }
        if self.horizon == 0 {
            return Err(Error::config("online.horizon", "must be at least 1"));
        }
        if self.total_env_steps == 0 {
            return Err(Error::config("online.total_env_steps", "must be at least 1"));
        }
        if self.episode_window == 0 {
            return Err(Error::config("online.episode_window", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct OnlineConfig {
    pub env: EnvConfig,
    pub variant: Variant,
    pub ppo: PpoConfig,
    pub nets: NetConfig,
    pub schedule: OnlineSchedule,
    /// Deterministic evaluation episodes after training (0 to skip).
    pub eval_episodes: usize,
}

#[derive(Debug, Clone)]
pub struct OnlineOutcome {
    pub agent: Agent,
    pub rows: Vec<MetricsRow>,
    pub updates: Vec<PpoStats>,
    pub eval: Option<EvalReport>,
}

impl OnlineOutcome {
    /// Return and success rate of the last logged training row.
    pub fn final_train(&self) -> (Option<f64>, Option<f64>) {
        self.rows
            .iter()
            .rev()
            .find(|r| r.phase == Phase::Train)
            .map(|r| (r.episodic_return_mean, r.success_rate))
            .unwrap_or((None, None))
    }
}

/// Trains one variant with PPO, logging one row per update via `on_row`.
pub fn train_online(cfg: &OnlineConfig, seed: u64, run_id: &str, mut on_row: impl FnMut(&MetricsRow) -> Result<()>) -> Result<OnlineOutcome> {
    cfg.ppo.validate()?;
    cfg.schedule.validate()?;
    let spec = cfg.env.spec()?;
    let mut agent = Agent::new(cfg.variant, &spec, &cfg.nets, cfg.ppo.normalize_input, cfg.ppo.normalize_value, seed)?;
    let mut opt = PpoOptimizer::new(&agent);
    let mut venv = VecEnv::new(&cfg.env, cfg.schedule.actors, seed)?;
    let mut update_rng = stream(seed, streams::UPDATE);
    let mut window: VecDeque<(f64, bool)> = VecDeque::with_capacity(cfg.schedule.episode_window);
    let mut rows = Vec::new();
    let mut updates = Vec::new();
    let mut env_steps = 0u64;

    while env_steps < cfg.schedule.total_env_steps {
        let (batch, episodes) = collect_rollouts(&agent, &mut venv, cfg.schedule.horizon, cfg.ppo.value_bootstrap)?;
        env_steps += batch.len() as u64;
        for ep in episodes {
            if window.len() == cfg.schedule.episode_window {
                window.pop_front();
            }
            window.push_back((ep.ret, ep.success));
        }
        let stats = ppo_update(&mut agent, &mut opt, &batch, &cfg.ppo, &mut update_rng)?;
        // statistics stay frozen during the update so the first ratios are exactly 1
        agent.obs_norm.update(batch.obs.view());

        let mut row = MetricsRow::new(run_id, seed, Phase::Train, env_steps);
        if !window.is_empty() {
            let n = window.len() as f64;
            row.episodic_return_mean = Some(window.iter().map(|e| e.0).sum::<f64>() / n);
            row.success_rate = Some(window.iter().filter(|e| e.1).count() as f64 / n);
        }
        row.policy_loss = Some(stats.policy_loss);
        row.value_loss = Some(stats.value_loss);
        row.approx_kl = Some(stats.approx_kl);
        row.clip_fraction = Some(stats.clip_fraction);
        row.epochs_completed = Some(stats.epochs_completed as u32);
        if cfg.variant == Variant::Sasa {
            row.sym_policy_loss = Some(stats.sym_policy_loss);
            row.sym_value_loss = Some(stats.sym_value_loss);
        }
        on_row(&row)?;
        rows.push(row);
        updates.push(stats);
    }

    let eval = if cfg.eval_episodes > 0 {
        let report = evaluate(&cfg.env, cfg.eval_episodes, seed, |o| agent.act_mean(o))?;
        let mut row = MetricsRow::new(run_id, seed, Phase::Eval, env_steps);
        row.episodic_return_mean = Some(report.mean_return);
        row.success_rate = Some(report.success_rate);
        on_row(&row)?;
        rows.push(row);
        Some(report)
    } else {
        None
    };
    Ok(OnlineOutcome { agent, rows, updates, eval })
}
