//! Trains one PPO variant on RotReach and prints the learning curve.
//!
//! cargo run --example train_online -- [variant] [env_steps] [seed]

use symmarl::envs::EnvConfig;
use symmarl::online::{train_online, NetConfig, OnlineConfig, OnlineSchedule, PpoConfig, Variant};

fn main() -> symmarl::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let variant: Variant = args.get(1).map(String::as_str).unwrap_or("MASA").parse()?;
    let steps: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(200_000);
    let seed: u64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(0);

    let cfg = OnlineConfig {
        env: EnvConfig::rotreach(3),
        variant,
        ppo: PpoConfig::default(),
        nets: NetConfig::default(),
        schedule: OnlineSchedule {
            total_env_steps: steps,
            ..OnlineSchedule::default()
        },
        eval_episodes: 20,
    };
    let start = std::time::Instant::now();
    let out = train_online(&cfg, seed, "example", |row| {
        if row.step % 20_480 < 2048 {
            println!(
                "{:>8} {:>6} return {:>9.3} success {:.2} kl {:.5} epochs {}",
                row.step,
                format!("{:?}", row.phase).to_lowercase(),
                row.episodic_return_mean.unwrap_or(f64::NAN),
                row.success_rate.unwrap_or(f64::NAN),
                row.approx_kl.unwrap_or(f64::NAN),
                row.epochs_completed.unwrap_or(0),
            );
        }
        Ok(())
    })?;
    let (ret, success) = out.final_train();
    println!("{variant} seed {seed}: final return {:.3}, success {:.2}, {:.1}s", ret.unwrap_or(f64::NAN), success.unwrap_or(f64::NAN), start.elapsed().as_secs_f64());
    if let Some(e) = out.eval {
        println!("deterministic eval: success {:.2}, return {:.3}", e.success_rate, e.mean_return);
    }
    Ok(())
}
