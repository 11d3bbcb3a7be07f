//! Trains a short run per seed through the harness, then aggregates the seed
//! curves into median and quartiles.
//!
//! cargo run --example aggregate_runs -- [out_dir]

use std::path::PathBuf;

use symmarl::harness::{cmd_aggregate, cmd_train, RunConfig};

fn main() -> symmarl::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "runs/aggregate-demo".into()));
    let cfg = RunConfig::from_json(
        &format!(
            r#"{{
                "env": {{"id": "rotreach", "n": 3}},
                "variant": "MASA",
                "algorithm": "ppo",
                "seeds": [0, 1, 2],
                "output_dir": {:?},
                "schedule": {{"actors": 16, "horizon": 32, "total_env_steps": 8192}},
                "eval_episodes": 0
            }}"#,
            dir.display().to_string()
        ),
        "inline".as_ref(),
    )?;
    let report = cmd_train(&cfg)?;
    for o in &report.outcomes {
        println!("seed {} -> {}", o.seed, o.metrics.display());
    }
    let (path, summary) = cmd_aggregate(&cfg.output_dir(), None)?;
    for row in &summary.rows {
        println!(
            "{:>6} return {:>8.2} [{:>8.2}, {:>8.2}]",
            row.step,
            row.return_median.unwrap_or(f64::NAN),
            row.return_p25.unwrap_or(f64::NAN),
            row.return_p75.unwrap_or(f64::NAN)
        );
    }
    println!("summary -> {}", path.display());
    Ok(())
}
