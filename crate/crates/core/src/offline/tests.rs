use ndarray::{array, Array1, Array2};

use super::*;
use crate::envs::EnvConfig;
use crate::eval::evaluate;
use crate::masa::Policy;
use crate::net::AdamState;
use crate::online::{NetConfig, Variant};
use crate::symmetry::TransformSet;

fn small_nets() -> NetConfig {
    NetConfig {
        policy_hidden: vec![32, 32],
        critic_hidden: vec![32, 32],
        ..NetConfig::default()
    }
}

#[test]
fn expert_solves_rotreach() {
    let env = EnvConfig::rotreach(3);
    let expert = scripted_expert(&env, false).unwrap();
    let r = evaluate(&env, 100, 0, |o| Ok(expert(o))).unwrap();
    assert!(r.success_rate >= 0.95, "{r:?}");
    let again = evaluate(&env, 100, 0, |o| Ok(expert(o))).unwrap();
    assert_eq!(r, again);
    let asym = scripted_expert(&env, true).unwrap();
    assert!(evaluate(&env, 50, 0, |o| Ok(asym(o))).unwrap().success_rate >= 0.95);
}

#[test]
fn pole_expert_balances() {
    let env = EnvConfig::thrusterpole();
    let r = evaluate(&env, 10, 0, |o| Ok(pole_expert(o))).unwrap();
    assert_eq!(r.success_rate, 1.0, "{r:?}");
}

#[test]
fn weak_generator_is_worse_than_expert() {
    let env = EnvConfig::rotreach(3);
    let expert = generate_dataset(&env, GeneratorKind::Expert, 40, 1).unwrap();
    let weak = generate_dataset(&env, GeneratorKind::Weak, 40, 1).unwrap();
    assert!(weak.meta.mean_success < expert.meta.mean_success, "{} vs {}", weak.meta.mean_success, expert.meta.mean_success);
    assert_eq!(expert.meta.episodes, 40);
    assert_eq!(expert.transitions.iter().filter(|t| t.done).count(), 40);
}

#[test]
fn generator_kinds_parse() {
    for k in GeneratorKind::ALL {
        assert_eq!(k.name().parse::<GeneratorKind>().unwrap(), k);
    }
    assert_eq!("Weak&Expert".parse::<GeneratorKind>().unwrap(), GeneratorKind::WeakExpert);
    assert!(matches!("random".parse::<GeneratorKind>(), Err(crate::Error::UnknownPolicyKind(_))));
}

#[test]
fn dataset_file_round_trip_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let env = EnvConfig::rotreach(3);
    let a = generate_dataset(&env, GeneratorKind::Mixed, 5, 3).unwrap();
    let b = generate_dataset(&env, GeneratorKind::Mixed, 5, 3).unwrap();
    let (pa, pb) = (dir.path().join("a.jsonl"), dir.path().join("b.jsonl"));
    a.save(&pa).unwrap();
    b.save(&pb).unwrap();
    assert_eq!(std::fs::read(&pa).unwrap(), std::fs::read(&pb).unwrap());
    let back = Dataset::load(&pa).unwrap();
    assert_eq!(back.transitions, a.transitions);
    assert_eq!(back.meta, a.meta);

    let text = std::fs::read_to_string(&pa).unwrap();
    let truncated: String = text.lines().take(3).map(|l| format!("{l}\n")).collect();
    std::fs::write(&pb, truncated).unwrap();
    assert!(matches!(Dataset::load(&pb), Err(crate::Error::Format { .. })));
}

#[test]
fn inconsistent_episode_flags_are_rejected() {
    let env = EnvConfig::rotreach(3);
    let mut ds = generate_dataset(&env, GeneratorKind::Expert, 2, 0).unwrap();
    ds.transitions[0].done = true;
    assert!(ds.validate().is_err());
}

#[test]
fn reflection_augmentation_doubles() {
    let env = EnvConfig {
        horizon: Some(5),
        ..EnvConfig::thrusterpole()
    };
    let ds = generate_dataset(&env, GeneratorKind::Expert, 2, 0).unwrap();
    assert_eq!(ds.len(), 10);
    let aug = augment_symmetric(&ds).unwrap();
    assert_eq!(aug.len(), 20);
    assert_eq!(aug.transitions[..10], ds.transitions[..]);
    let set = TransformSet::new(ds.spec()).unwrap();
    for (t, m) in ds.transitions.iter().zip(&aug.transitions[10..]) {
        assert_eq!(m.obs, set.obs(1).apply(&t.obs).unwrap());
        assert_eq!(m.reward, t.reward);
        assert_eq!(m.done, t.done);
        assert_eq!(m.episode, t.episode + 2);
    }
    assert_eq!(aug.meta.generator, "expert+augmented");
}

#[test]
fn augmented_transitions_replay_through_simulator() {
    let env = EnvConfig::rotreach(3);
    let ds = generate_dataset(&env, GeneratorKind::AsymmetricExpert, 5, 2).unwrap();
    let aug = augment_symmetric(&ds).unwrap();
    assert_eq!(aug.len(), 3 * ds.len());
    let mut sim = env.build().unwrap();
    for t in &aug.transitions {
        sim.set_from_observation(&t.obs).unwrap();
        let step = sim.step(&t.action).unwrap();
        let diff = step.obs.iter().zip(&t.next_obs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(diff <= 1e-8, "{diff}");
        assert!((step.reward - t.reward).abs() <= 1e-8);
    }
}

fn zero_output_policy(spec: &crate::symmetry::SymmetrySpec) -> Policy {
    let agent = crate::online::Agent::new(Variant::Masa, spec, &small_nets(), false, false, 0).unwrap();
    let mut policy = agent.policy;
    let last = policy.phi.layers.last_mut().unwrap();
    last.weight.fill(0.0);
    last.bias.fill(0.0);
    policy
}

#[test]
fn perfect_clone_loss_is_entropy_term() {
    let spec = EnvConfig::rotreach(3).spec().unwrap();
    let mut policy = zero_output_policy(&spec);
    policy.log_std.fill(-0.5);
    let obs = Array2::from_elem((4, spec.obs_width()), 0.3);
    let acts = Array2::zeros((4, spec.act_width()));
    let d = spec.act_width() as f64;
    let expected = -0.5 * d + 0.5 * d * (2.0 * std::f64::consts::PI).ln();
    assert!((bc_loss(&policy, obs.view(), acts.view()).unwrap() - expected).abs() < 1e-12);
}

#[test]
fn bc_step_decreases_loss_on_repeated_sample() {
    let spec = EnvConfig::rotreach(3).spec().unwrap();
    let agent = crate::online::Agent::new(Variant::Sa, &spec, &small_nets(), false, false, 1).unwrap();
    let mut policy = agent.policy;
    let obs = Array2::from_shape_fn((8, spec.obs_width()), |(_, j)| 0.1 * j as f64);
    let acts = Array2::from_shape_fn((8, spec.act_width()), |(_, j)| 0.5 - 0.2 * j as f64);
    let mut adam = AdamState::new(&policy.slice_sizes());
    let before = bc_update(&mut policy, &mut adam, obs.view(), acts.view(), 1e-3).unwrap();
    let after = bc_loss(&policy, obs.view(), acts.view()).unwrap();
    assert!(after < before, "{before} -> {after}");
    let empty = Array2::zeros((0, spec.obs_width()));
    assert!(matches!(
        bc_update(&mut policy, &mut adam, empty.view(), Array2::zeros((0, spec.act_width())).view(), 1e-3),
        Err(crate::Error::EmptyBatch)
    ));
}

#[test]
fn iql_scalar_pieces() {
    assert!((expectile_loss(1.0, 0.7) - 0.7).abs() < 1e-15);
    assert!((expectile_loss(-1.0, 0.7) - 0.3).abs() < 1e-15);
    assert_eq!(awr_weight(0.0, 3.0, 100.0), 1.0);
    assert_eq!(awr_weight(10.0, 3.0, 100.0), 100.0);
    let r = array![0.5, -1.25, 2.0];
    let y = bellman_target(r.view(), Array1::zeros(3).view(), array![7.0, 8.0, 9.0].view(), 0.0);
    assert_eq!(y, r);
    let y = bellman_target(r.view(), array![0.0, 1.0, 0.0].view(), array![1.0, 1.0, 1.0].view(), 0.5);
    assert_eq!(y, array![1.0, -1.25, 2.5]);
    assert!(IqlConfig { expectile: 0.4, ..IqlConfig::default() }.validate().is_err());
}

#[test]
fn iql_update_soft_updates_targets() {
    let env = EnvConfig::rotreach(3);
    let ds = generate_dataset(&env, GeneratorKind::Expert, 3, 0).unwrap();
    let (mut agent, data) = prepare_offline(&ds, Variant::Masa, &small_nets(), true, 0).unwrap();
    let mut state = IqlState::new(
        agent.critic.structure(),
        ds.spec().obs_width(),
        ds.spec().act_width(),
        &[32, 32],
        small_nets().activation,
        [1, 2],
        &agent.policy,
        &agent.critic,
    )
    .unwrap();
    let n = data.len().min(16);
    let obs = agent.obs_norm.normalize(data.observations().slice(ndarray::s![..n, ..]));
    let acts = Array2::from_shape_vec((n, 6), data.transitions[..n].iter().flat_map(|t| t.action.clone()).collect()).unwrap();
    let rewards: Array1<f64> = data.transitions[..n].iter().map(|t| t.reward).collect();
    let next = Array2::from_shape_vec((n, ds.spec().obs_width()), data.transitions[..n].iter().flat_map(|t| t.next_obs.clone()).collect()).unwrap();
    let next = agent.obs_norm.normalize(next.view());
    let terminal = Array1::zeros(n);
    let batch = IqlBatch {
        obs: obs.view(),
        actions: acts.view(),
        rewards: rewards.view(),
        next_obs: next.view(),
        terminal: terminal.view(),
    };
    let old_target: Vec<f64> = state.q_target[0].slices().concat();
    let losses = iql_update(&mut agent.policy, &mut agent.critic, &mut state, &batch, &IqlConfig::default(), 1e-3).unwrap();
    assert!(losses.value.is_finite() && losses.q.is_finite() && losses.policy.is_finite());
    let online: Vec<f64> = state.q[0].slices().concat();
    let target: Vec<f64> = state.q_target[0].slices().concat();
    for ((t, o), old) in target.iter().zip(&online).zip(&old_target) {
        assert!((t - (old + 0.005 * (o - old))).abs() < 1e-12);
    }
    assert_ne!(online, old_target);
}

#[test]
fn random_policy_rarely_succeeds() {
    let env = EnvConfig::rotreach(3);
    let spec = env.spec().unwrap();
    let agent = crate::online::Agent::new(Variant::Masa, &spec, &small_nets(), false, false, 5).unwrap();
    let r = evaluate_agent(&agent, &env, 30, 0).unwrap();
    assert!(r.success_rate <= 0.1, "{r:?}");
    assert_eq!(r, evaluate_agent(&agent, &env, 30, 0).unwrap());
}

#[test]
fn offline_training_is_seeded_and_logs() {
    let env = EnvConfig::rotreach(3);
    let ds = generate_dataset(&env, GeneratorKind::Expert, 10, 0).unwrap();
    let cfg = OfflineConfig {
        algo: OfflineAlgo::Iql,
        gradient_steps: 40,
        batch_size: 32,
        log_every: 20,
        ..OfflineConfig::default()
    };
    let run = || train_offline(&ds, Variant::Masa, &small_nets(), &cfg, 3, 4, "x", |_| Ok(())).unwrap();
    let (a, b) = (run(), run());
    assert_eq!(a.rows.len(), 3);
    assert_eq!(a.rows, b.rows);
    assert!(a.rows[0].q_loss.is_some());
    let sasa = train_offline(&ds, Variant::Sasa, &small_nets(), &OfflineConfig { gradient_steps: 5, ..cfg }, 0, 4, "x", |_| Ok(())).unwrap();
    assert_eq!(sasa.train_size, 3 * ds.len());
}

#[test]
fn augmenting_an_asymmetric_expert_blurs_bc() {
    let env = EnvConfig::rotreach(3);
    let ds = generate_dataset(&env, GeneratorKind::AsymmetricExpert, 60, 0).unwrap();
    let cfg = OfflineConfig {
        gradient_steps: 1500,
        batch_size: 128,
        learning_rate: 1e-3,
        ..OfflineConfig::default()
    };
    let sigma = |v: Variant| {
        let out = train_offline(&ds, v, &small_nets(), &cfg, 0, 0, "x", |_| Ok(())).unwrap();
        let ls = out.agent.policy.flat_log_std();
        ls.iter().map(|l| l.exp()).sum::<f64>() / ls.len() as f64
    };
    let (plain, augmented) = (sigma(Variant::Sa), sigma(Variant::Sasa));
    assert!(augmented > plain, "augmented σ {augmented} vs plain σ {plain}");
}

