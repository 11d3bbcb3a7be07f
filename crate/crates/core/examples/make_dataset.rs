//! Generates a scripted dataset, augments it with every symmetric copy and
//! writes both files.
//!
//! cargo run --example make_dataset -- [generator] [episodes] [out_dir]

use std::path::PathBuf;

use symmarl::envs::EnvConfig;
use symmarl::offline::{augment_symmetric, generate_dataset, GeneratorKind};

fn main() -> symmarl::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let kind: GeneratorKind = args.get(1).map(String::as_str).unwrap_or("expert").parse()?;
    let episodes: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(50);
    let dir = PathBuf::from(args.get(3).map(String::as_str).unwrap_or("runs/datasets"));
    std::fs::create_dir_all(&dir)?;

    let ds = generate_dataset(&EnvConfig::rotreach(3), kind, episodes, 0)?;
    let plain = dir.join(format!("rotreach3-{kind}.jsonl"));
    ds.save(&plain)?;
    println!(
        "{}: {} transitions, success {:.2}, return {:.2}",
        plain.display(),
        ds.len(),
        ds.meta.mean_success,
        ds.meta.mean_return
    );

    let aug = augment_symmetric(&ds)?;
    let augmented = dir.join(format!("rotreach3-{kind}.augmented.jsonl"));
    aug.save(&augmented)?;
    println!("{}: {} transitions ({})", augmented.display(), aug.len(), aug.meta.generator);
    Ok(())
}
