//! Behaviour cloning or IQL on a scripted RotReach dataset, SA vs SASA-data vs MASA.
//!
//! cargo run --example train_offline -- [bc|iql] [generator] [episodes] [seeds] [gradient_steps]

use std::time::Instant;

use symmarl::envs::EnvConfig;
use symmarl::offline::{generate_dataset, train_offline, GeneratorKind, OfflineAlgo, OfflineConfig};
use symmarl::online::{NetConfig, Variant};

fn main() -> symmarl::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let algo = match args.get(1).map(String::as_str).unwrap_or("bc") {
        "iql" => OfflineAlgo::Iql,
        _ => OfflineAlgo::Bc,
    };
    let kind: GeneratorKind = args.get(2).map(String::as_str).unwrap_or("expert").parse()?;
    let episodes: usize = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(500);
    let seeds: u64 = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(3);
    let steps: usize = args.get(5).and_then(|s| s.parse().ok()).unwrap_or(5000);

    let env = EnvConfig::rotreach(3);
    let ds = generate_dataset(&env, kind, episodes, 0)?;
    println!(
        "{kind} dataset: {} transitions, generator success {:.2}",
        ds.len(),
        ds.meta.mean_success
    );
    let cfg = OfflineConfig {
        algo,
        gradient_steps: steps,
        ..OfflineConfig::default()
    };
    for variant in [Variant::Sa, Variant::Sasa, Variant::Masa] {
        let start = Instant::now();
        let mut success = Vec::new();
        for seed in 0..seeds {
            let out = train_offline(&ds, variant, &NetConfig::default(), &cfg, 20, seed, "example", |_| Ok(()))?;
            let eval = out.eval.expect("eval episodes requested");
            println!("  {variant:<4} seed {seed}: success {:.2} return {:.2}", eval.success_rate, eval.mean_return);
            success.push(eval.success_rate);
        }
        success.sort_by(f64::total_cmp);
        println!(
            "{variant:<4} median success {:.2} ({:.0}s)",
            success[success.len() / 2],
            start.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
