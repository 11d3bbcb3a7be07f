//! Probes step(T_i s, T_i a) = T_i step(s, a) on both environments and rolls
//! out the scripted experts.
//!
//! cargo run --example env_commutation

use symmarl::envs::{mdp_commutation, EnvConfig};
use symmarl::eval::evaluate;
use symmarl::offline::scripted_expert;

fn main() -> symmarl::Result<()> {
    for env in [EnvConfig::rotreach(2), EnvConfig::rotreach(3), EnvConfig::rotreach(4), EnvConfig::thrusterpole()] {
        let r = mdp_commutation(&env, 1000, 0)?;
        let expert = scripted_expert(&env, false)?;
        let e = evaluate(&env, 20, 0, |o| Ok(expert(o)))?;
        println!(
            "{:<12} n={:<4} obs {:.1e}  reward {:.1e}  flag mismatches {}  expert success {:.2}",
            env.id,
            env.n.map_or("-".into(), |n| n.to_string()),
            r.observation,
            r.reward,
            r.flag_mismatches,
            e.success_rate
        );
    }
    Ok(())
}
