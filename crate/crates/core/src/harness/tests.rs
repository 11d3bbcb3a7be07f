use std::fs;
use std::path::Path;

use super::*;
use crate::envs::EnvConfig;
use crate::error::Error;
use crate::metrics::{MetricsRow, MetricsWriter, Phase};
use crate::online::Variant;

fn minimal(extra: &str) -> String {
    format!(r#"{{"env": {{"id": "rotreach", "n": 3}}, "variant": "MASA", "algorithm": "ppo", "seeds": [0, 1], "output_dir": "runs/x"{extra}}}"#)
}

fn tiny_ppo(dir: &Path) -> RunConfig {
    let mut cfg = RunConfig::from_json(&minimal(""), Path::new("inline")).unwrap();
    cfg.output_dir = dir.to_path_buf();
    cfg.seeds = vec![3];
    cfg.nets.policy_hidden = vec![8];
    cfg.nets.critic_hidden = vec![8];
    cfg.schedule.actors = 2;
    cfg.schedule.horizon = 8;
    cfg.schedule.total_env_steps = 64;
    cfg.eval_episodes = 1;
    cfg
}

#[test]
fn config_round_trips_through_json() {
    let cfg = RunConfig::from_json(&minimal(r#", "ppo": {"gamma": 0.95}"#), Path::new("inline")).unwrap();
    assert_eq!(cfg.ppo.gamma, 0.95);
    assert_eq!(cfg.variant, Variant::Masa);
    let back = RunConfig::from_json(&cfg.to_json(), Path::new("inline")).unwrap();
    assert_eq!(back, cfg);
    assert_eq!(cfg.run_id(), "masa-ppo-rotreach3");
}

#[test]
fn invalid_field_is_named() {
    let err = RunConfig::from_json(&minimal(r#", "ppo": {"gamma": 1.5}"#), Path::new("inline")).unwrap_err();
    assert!(err.to_string().contains("gamma"), "{err}");
    let err = RunConfig::from_json(&minimal(r#", "seeds": []"#).replace(r#""seeds": [0, 1], "#, ""), Path::new("inline")).unwrap_err();
    assert!(matches!(err, Error::Config { ref field, .. } if field == "seeds"), "{err}");
}

#[test]
fn unknown_keys_rejected_and_comments_ignored() {
    assert!(RunConfig::from_json(&minimal(r#", "ppo": {"gama": 0.9}"#), Path::new("inline")).is_err());
    assert!(RunConfig::from_json(&minimal(r#", "learning_rate": 0.1"#), Path::new("inline")).is_err());
    let cfg = RunConfig::from_json(&minimal(r#", "_note": "ignored", "ppo": {"_why": 1}"#), Path::new("inline")).unwrap();
    assert_eq!(cfg.seeds, vec![0, 1]);
}

#[test]
fn bad_json_reports_position() {
    let err = RunConfig::from_json("{\n  \"env\": }", Path::new("cfg.json")).unwrap_err();
    assert!(err.to_string().contains("line 2"), "{err}");
}

#[test]
fn offline_algorithm_follows_top_level() {
    let text = minimal("").replace("\"ppo\"", "\"iql\"");
    let cfg = RunConfig::from_json(&text, Path::new("inline")).unwrap();
    assert_eq!(cfg.offline.algo, crate::offline::OfflineAlgo::Iql);
}

#[test]
fn linear_quantiles() {
    let v = [1.0, 2.0, 3.0, 4.0, 5.0];
    assert_eq!(quantile_linear(&v, 0.5), Some(3.0));
    assert_eq!(quantile_linear(&v, 0.25), Some(2.0));
    assert_eq!(quantile_linear(&v, 0.75), Some(4.0));
    assert_eq!(quantile_linear(&[1.0, 2.0], 0.25), Some(1.25));
    assert_eq!(quantile_linear(&[], 0.5), None);
}

fn write_curve(path: &Path, run: &str, seed: u64, values: &[f64]) {
    let mut w = MetricsWriter::create(path).unwrap();
    for (k, &v) in values.iter().enumerate() {
        let mut row = MetricsRow::new(run, seed, Phase::Train, 100 * (k as u64 + 1));
        row.episodic_return_mean = Some(v);
        row.success_rate = Some(v / 10.0);
        w.write(&row).unwrap();
    }
    w.flush().unwrap();
}

#[test]
fn identical_curves_aggregate_to_themselves() {
    let dir = tempfile::tempdir().unwrap();
    for seed in 0..3 {
        write_curve(&dir.path().join(format!("r_seed{seed}.csv")), "r", seed, &[1.0, 4.0, 9.0]);
    }
    fs::write(dir.path().join("notes.csv"), "a,b\n1,2\n").unwrap();
    let report = aggregate(dir.path()).unwrap();
    assert!(report.warnings.is_empty());
    assert_eq!(report.rows.len(), 3);
    for (row, v) in report.rows.iter().zip([1.0, 4.0, 9.0]) {
        assert_eq!(row.seeds, 3);
        assert_eq!((row.return_median, row.return_p25, row.return_p75), (Some(v), Some(v), Some(v)));
    }
}

#[test]
fn unequal_curves_truncate_with_warning() {
    let dir = tempfile::tempdir().unwrap();
    write_curve(&dir.path().join("r_seed0.csv"), "r", 0, &[1.0, 2.0, 3.0]);
    write_curve(&dir.path().join("r_seed1.csv"), "r", 1, &[3.0, 4.0]);
    let report = aggregate(dir.path()).unwrap();
    assert_eq!(report.rows.len(), 2);
    assert_eq!(report.warnings.len(), 1);
    assert_eq!(report.rows[1].return_median, Some(3.0));
}

#[test]
fn empty_directory_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(aggregate(dir.path()), Err(Error::Config { .. })));
}

#[test]
fn train_writes_csv_and_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_ppo(dir.path());
    let report = cmd_train(&cfg).unwrap();
    assert!(report.failures.is_empty());
    let out = &report.outcomes[0];
    assert!(out.metrics.ends_with("masa-ppo-rotreach3_seed3.csv"));
    assert!(sidecar_path(&out.checkpoint).exists());
    let (agent, side) = load_agent(&out.checkpoint).unwrap();
    assert_eq!(agent.variant, Variant::Masa);
    assert_eq!(side.seed, 3);
    let eval = cmd_eval(&out.checkpoint, None, 2, 0, Some(&dir.path().join("eval.csv"))).unwrap();
    assert_eq!(eval.episodes, 2);

    let sym = check_symmetry(&EnvConfig::rotreach(3), Some(&out.checkpoint), 20, 1).unwrap();
    assert!(sym.pass, "{sym:?}");
    assert!(sym.checks.iter().any(|c| c.name == "critic.invariance"));
}

#[test]
fn missing_sidecar_is_a_format_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.ckpt");
    fs::write(&path, b"junk").unwrap();
    assert!(matches!(load_agent(&path), Err(Error::Format { .. })));
}

#[test]
fn symmetry_check_of_environments_passes() {
    for env in [EnvConfig::rotreach(4), EnvConfig::thrusterpole()] {
        let r = check_symmetry(&env, None, 50, 2).unwrap();
        assert!(r.pass, "{r:?}");
        assert_eq!(r.checks.len(), 7);
    }
}
