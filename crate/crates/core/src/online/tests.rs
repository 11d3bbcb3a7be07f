use ndarray::Array2;
use rand::Rng;

use super::*;
use crate::envs::EnvConfig;
use crate::seeding::{stream, streams};

fn small_nets() -> NetConfig {
    NetConfig {
        policy_hidden: vec![16, 16],
        critic_hidden: vec![16, 16],
        ..NetConfig::default()
    }
}

fn agent(variant: Variant, env: &EnvConfig, seed: u64) -> Agent {
    Agent::new(variant, &env.spec().unwrap(), &small_nets(), true, true, seed).unwrap()
}

fn rollout(variant: Variant, seed: u64) -> (Agent, RolloutBatch) {
    let env = EnvConfig::rotreach(3);
    let agent = agent(variant, &env, seed);
    let mut venv = VecEnv::new(&env, 8, seed).unwrap();
    let (batch, _) = collect_rollouts(&agent, &mut venv, 16, true).unwrap();
    (agent, batch)
}

fn params(agent: &Agent) -> Vec<f64> {
    agent
        .policy
        .slices()
        .into_iter()
        .chain(agent.critic.slices())
        .flat_map(|s| s.to_vec())
        .collect()
}

#[test]
fn rollout_has_horizon_times_actors_rows() {
    let (agent, batch) = rollout(Variant::Masa, 0);
    assert_eq!(batch.len(), 128);
    assert_eq!(batch.obs.dim(), (128, agent.spec().obs_width()));
    assert_eq!(batch.actions.dim(), (128, agent.spec().act_width()));
    assert_eq!(batch.actor_rows(3).collect::<Vec<_>>()[..3], [3, 11, 19]);
}

#[test]
fn stored_log_probs_match_policy() {
    let (agent, batch) = rollout(Variant::Sa, 1);
    let (mean, _) = agent.policy.mean(batch.norm_obs.view()).unwrap();
    let lp = agent.policy.log_prob_rows(mean.view(), batch.actions.view());
    for (a, b) in lp.iter().zip(&batch.log_probs) {
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }
}

#[test]
fn seeded_rollouts_are_identical() {
    let (_, a) = rollout(Variant::Masa, 7);
    let (_, b) = rollout(Variant::Masa, 7);
    assert_eq!(a.actions, b.actions);
    assert_eq!(a.rewards, b.rewards);
    let (_, c) = rollout(Variant::Masa, 8);
    assert_ne!(a.actions, c.actions);
}

#[test]
fn first_minibatch_ratios_are_one() {
    for v in Variant::ALL {
        let (mut agent, batch) = rollout(v, 2);
        let mut opt = PpoOptimizer::new(&agent);
        let cfg = PpoConfig {
            minibatch_size: 32,
            ..PpoConfig::default()
        };
        let stats = ppo_update(&mut agent, &mut opt, &batch, &cfg, &mut stream(2, streams::UPDATE)).unwrap();
        assert!(stats.first_ratio_deviation < 1e-10, "{v}: {}", stats.first_ratio_deviation);
        assert!(stats.grad_steps >= 4);
    }
}

#[test]
fn clipped_surrogate_cases() {
    let close = |a: f64, b: f64| (a - b).abs() < 1e-12;
    let (o, g) = clipped_surrogate(1.5, 1.0, 0.2);
    assert!(close(o, 1.2) && !g);
    let (o, g) = clipped_surrogate(1.5, -1.0, 0.2);
    assert!(close(o, -1.5) && g);
    let (o, g) = clipped_surrogate(0.5, 1.0, 0.2);
    assert!(close(o, 0.5) && g);
    let (o, g) = clipped_surrogate(0.5, -1.0, 0.2);
    assert!(close(o, -0.8) && !g);
    let (o, g) = clipped_surrogate(1.1, 2.0, 0.2);
    assert!(close(o, 2.2) && g);
}

#[test]
fn zero_advantages_leave_parameters_unchanged() {
    let (mut agent, mut batch) = rollout(Variant::Masa, 3);
    // with γ = 0 and r = V the advantages vanish
    batch.rewards = batch.values.clone();
    agent.normalize_value = false;
    let before = params(&agent);
    let mut opt = PpoOptimizer::new(&agent);
    let cfg = PpoConfig {
        gamma: 0.0,
        critic_coef: 0.0,
        normalize_advantage: false,
        minibatch_size: 32,
        ..PpoConfig::default()
    };
    let stats = ppo_update(&mut agent, &mut opt, &batch, &cfg, &mut stream(3, streams::UPDATE)).unwrap();
    assert_eq!(params(&agent), before);
    assert_eq!(stats.epochs_completed, cfg.mini_epochs);
    assert_eq!(stats.approx_kl, 0.0);
}

#[test]
fn kl_threshold_stops_after_first_epoch() {
    let (mut agent, batch) = rollout(Variant::Sa, 4);
    let mut opt = PpoOptimizer::new(&agent);
    let cfg = PpoConfig {
        kl_threshold: 1e-12,
        learning_rate: 1e-2,
        minibatch_size: 32,
        ..PpoConfig::default()
    };
    let stats = ppo_update(&mut agent, &mut opt, &batch, &cfg, &mut stream(4, streams::UPDATE)).unwrap();
    assert_eq!(stats.epochs_completed, 1);
    assert!(stats.early_stopped);
    assert_eq!(stats.grad_steps, 4);

    let loose = PpoConfig {
        kl_threshold: 1e9,
        ..cfg
    };
    let (mut agent, batch) = rollout(Variant::Sa, 4);
    let mut opt = PpoOptimizer::new(&agent);
    let stats = ppo_update(&mut agent, &mut opt, &batch, &loose, &mut stream(4, streams::UPDATE)).unwrap();
    assert_eq!(stats.epochs_completed, 5);
    assert!(!stats.early_stopped);
}

fn random_obs(agent: &Agent, rows: usize, seed: u64) -> Array2<f64> {
    let mut rng = stream(seed, 99);
    Array2::from_shape_fn((rows, agent.spec().obs_width()), |_| rng.random_range(-1.0..1.0))
}

#[test]
fn sasa_losses_vanish_for_masa_only() {
    let env = EnvConfig::rotreach(3);
    let masa = agent(Variant::Masa, &env, 5);
    let mut sa = agent(Variant::Sa, &env, 5);
    // make the critic output large enough to be visibly asymmetric
    sa.critic.theta.layers.last_mut().unwrap().weight.mapv_inplace(|w| w * 100.0);
    let obs = random_obs(&masa, 32, 5);
    for i in 1..3 {
        let (p, v) = sasa_aux_losses(&masa, obs.view(), i).unwrap();
        assert!(p < 1e-9 && v < 1e-9, "{p} {v}");
        let (p, v) = sasa_aux_losses(&sa, obs.view(), i).unwrap();
        assert!(p > 1e-6 && v > 1e-6, "{p} {v}");
    }
}

#[test]
fn constant_critic_has_zero_value_symmetry_loss() {
    let env = EnvConfig::rotreach(3);
    let mut sa = agent(Variant::Sa, &env, 6);
    for l in sa.critic.theta.layers.iter_mut() {
        l.weight.fill(0.0);
    }
    let obs = random_obs(&sa, 16, 6);
    let (_, v) = sasa_aux_losses(&sa, obs.view(), 1).unwrap();
    assert_eq!(v, 0.0);
}

#[test]
fn sasa_reduces_its_symmetry_loss() {
    let (mut agent, batch) = rollout(Variant::Sasa, 9);
    let obs = batch.obs.clone();
    let before = sasa_aux_losses(&agent, obs.view(), 1).unwrap();
    let mut opt = PpoOptimizer::new(&agent);
    let cfg = PpoConfig {
        kl_threshold: 1e9,
        learning_rate: 1e-3,
        minibatch_size: 32,
        sym_loss_weights: [10.0, 10.0],
        ..PpoConfig::default()
    };
    let mut rng = stream(9, streams::UPDATE);
    for _ in 0..5 {
        let stats = ppo_update(&mut agent, &mut opt, &batch, &cfg, &mut rng).unwrap();
        assert!(stats.sym_policy_loss > 0.0);
    }
    let after = sasa_aux_losses(&agent, obs.view(), 1).unwrap();
    assert!(after.0 < before.0, "{before:?} -> {after:?}");
}

#[test]
fn sasa_with_zero_weights_matches_sa() {
    let cfg = PpoConfig {
        sym_loss_weights: [0.0, 0.0],
        minibatch_size: 32,
        ..PpoConfig::default()
    };
    let run = |v: Variant| {
        let (mut agent, batch) = rollout(v, 10);
        let mut opt = PpoOptimizer::new(&agent);
        let stats = ppo_update(&mut agent, &mut opt, &batch, &cfg, &mut stream(10, streams::UPDATE)).unwrap();
        (params(&agent), stats)
    };
    let (pa, sa) = run(Variant::Sa);
    let (pb, sb) = run(Variant::Sasa);
    assert_eq!(pa, pb);
    assert_eq!(sa, sb);
}

#[test]
fn masa_with_one_agent_matches_sa() {
    let env = EnvConfig::rotreach(1);
    let run = |v: Variant| {
        let agent_ = agent(v, &env, 11);
        let mut agent_ = agent_;
        let mut venv = VecEnv::new(&env, 4, 11).unwrap();
        let (batch, _) = collect_rollouts(&agent_, &mut venv, 16, true).unwrap();
        let mut opt = PpoOptimizer::new(&agent_);
        let cfg = PpoConfig {
            minibatch_size: 16,
            ..PpoConfig::default()
        };
        let stats = ppo_update(&mut agent_, &mut opt, &batch, &cfg, &mut stream(11, streams::UPDATE)).unwrap();
        agent_.obs_norm.update(batch.obs.view());
        (params(&agent_), stats, agent_.obs_norm.stats.mean.clone())
    };
    let (pa, sa, ma) = run(Variant::Sa);
    let (pb, sb, mb) = run(Variant::Masa);
    assert_eq!(pa.len(), pb.len());
    for (a, b) in pa.iter().zip(&pb) {
        assert!((a - b).abs() < 1e-12);
    }
    assert!((sa.policy_loss - sb.policy_loss).abs() < 1e-12);
    assert!((sa.value_loss - sb.value_loss).abs() < 1e-12);
    for (a, b) in ma.iter().zip(mb.iter()) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn training_keeps_masa_symmetric() {
    let env = EnvConfig::rotreach(3);
    let cfg = OnlineConfig {
        env: env.clone(),
        variant: Variant::Masa,
        ppo: PpoConfig {
            minibatch_size: 64,
            learning_rate: 1e-3,
            ..PpoConfig::default()
        },
        nets: small_nets(),
        schedule: OnlineSchedule {
            actors: 8,
            horizon: 16,
            total_env_steps: 128 * 4,
            episode_window: 10,
        },
        eval_episodes: 0,
    };
    let out = train_online(&cfg, 12, "t", |_| Ok(())).unwrap();
    assert_eq!(out.rows.len(), 4);
    assert_eq!(out.rows.last().unwrap().step, 512);
    assert!(out.agent.obs_norm.stats.count > 0.0);
    // statistics moved away from the identity
    assert!(out.agent.obs_norm.stats.mean.iter().any(|m| m.abs() > 1e-3));
    let obs = random_obs(&out.agent, 32, 12);
    for i in 1..3 {
        let (p, v) = sasa_aux_losses(&out.agent, obs.view(), i).unwrap();
        assert!(p < 1e-9 && v < 1e-9, "{p} {v}");
    }
}

#[test]
fn online_run_logs_eval_row() {
    let cfg = OnlineConfig {
        env: EnvConfig::thrusterpole(),
        variant: Variant::Ma,
        ppo: PpoConfig {
            minibatch_size: 32,
            ..PpoConfig::default()
        },
        nets: small_nets(),
        schedule: OnlineSchedule {
            actors: 4,
            horizon: 16,
            total_env_steps: 64,
            episode_window: 10,
        },
        eval_episodes: 2,
    };
    let mut seen = 0;
    let out = train_online(&cfg, 0, "r", |_| {
        seen += 1;
        Ok(())
    })
    .unwrap();
    assert_eq!(seen, 2);
    assert_eq!(out.rows[1].phase, crate::metrics::Phase::Eval);
    assert!(out.eval.unwrap().episodes == 2);
}
