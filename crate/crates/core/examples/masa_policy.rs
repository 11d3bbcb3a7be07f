//! An untrained MASA policy is equivariant by construction; a monolithic one is not.
//!
//! cargo run --example masa_policy

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use symmarl::envs::env_symmetry_spec;
use symmarl::masa::{critic_residual, policy_residuals, Critic, CriticMode, Policy, Structure};
use symmarl::net::Activation;
use symmarl::symmetry::TransformSet;

fn main() -> symmarl::Result<()> {
    let spec = env_symmetry_spec("rotreach-3")?;
    let set = Arc::new(TransformSet::new(&spec)?);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let probes: Vec<Vec<f64>> = (0..10)
        .map(|k| (0..spec.obs_width()).map(|d| ((k * 31 + d * 7) as f64 * 0.37).sin()).collect())
        .collect();

    for (name, structure) in [("MASA", Structure::Symmetric(set.clone())), ("SA", Structure::Monolithic)] {
        let policy = Policy::new(structure.clone(), &spec, &[64, 64], Activation::Elu, 1)?;
        let critic = Critic::new(structure, CriticMode::V, spec.obs_width(), spec.act_width(), &[64, 64], Activation::Elu, 2)?;
        let eq = policy_residuals(&policy, &set, &probes, &mut rng)?;
        println!(
            "{name:<4} params {:>6}  agent {:.2e}  central {:.2e}  log-density {:.2e}  critic {:.2e}",
            policy.param_count(),
            eq.agent,
            eq.central,
            eq.log_density,
            critic_residual(&critic, &set, &probes, None)?
        );
    }

    let policy = Policy::new(Structure::Symmetric(set.clone()), &spec, &[64, 64], Activation::Elu, 1)?;
    let a = policy.joint_mean(&probes[0])?;
    let a1 = policy.joint_mean(&set.obs(1).apply(&probes[0])?)?;
    println!("arm actions for o:      {:?}", a.agents);
    println!("arm actions for T_1(o): {:?}", a1.agents);
    Ok(())
}
