use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use symmarl::envs::EnvConfig;
use symmarl::eval::evaluate;
use symmarl::offline::{scripted_expert, Dataset};

fn symmarl(args: &[&str], root: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_symmarl"))
        .args(args)
        .current_dir(root)
        .env_remove("SYMMARL_OUTPUT_ROOT")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

fn ppo_config(variant: &str, out: &str) -> String {
    format!(
        r#"{{
            "_note": "tiny run",
            "env": {{"id": "rotreach", "n": 3}},
            "variant": "{variant}",
            "algorithm": "ppo",
            "seeds": [0, 1],
            "output_dir": "{out}",
            "nets": {{"policy_hidden": [16], "critic_hidden": [16]}},
            "schedule": {{"actors": 4, "horizon": 16, "total_env_steps": 512}},
            "eval_episodes": 2
        }}"#
    )
}

#[test]
fn train_then_check_and_aggregate() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let cfg = write_config(root, "masa.json", &ppo_config("MASA", "runs"));
    let out = symmarl(&["train", "--config", &cfg], root);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    for seed in [0, 1] {
        assert!(root.join(format!("runs/masa-ppo-rotreach3_seed{seed}.csv")).exists());
        assert!(root.join(format!("runs/masa-ppo-rotreach3_seed{seed}.ckpt.spec.json")).exists());
    }

    let ck = "runs/masa-ppo-rotreach3_seed0.ckpt";
    let out = symmarl(&["check-symmetry", "--env", "rotreach-3", "--checkpoint", ck, "--samples", "50", "--report", "masa.json.report"], root);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(root.join("masa.json.report")).unwrap()).unwrap();
    assert_eq!(report["pass"], true);

    let out = symmarl(&["eval", ck, "--episodes", "3", "--out", "eval.csv"], root);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(fs::read_to_string(root.join("eval.csv")).unwrap().lines().count(), 2);

    let out = symmarl(&["aggregate", "runs"], root);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let summary = fs::read_to_string(root.join("runs/summary.csv")).unwrap();
    assert!(summary.lines().nth(1).unwrap().starts_with("masa-ppo-rotreach3,train,64,2,"), "{summary}");
}

#[test]
fn sa_checkpoint_violates_equivariance() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let cfg = write_config(root, "sa.json", &ppo_config("SA", "sa"));
    assert_eq!(code(&symmarl(&["train", &cfg], root)), 0);
    let out = symmarl(&["check-symmetry", "--env", "rotreach-3", "--checkpoint", "sa/sa-ppo-rotreach3_seed0.ckpt", "--samples", "50"], root);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stdout).contains("VIOLATED"));
}

#[test]
fn environment_only_check_passes() {
    let dir = tempfile::tempdir().unwrap();
    for env in ["rotreach-3", "thrusterpole"] {
        let out = symmarl(&["check-symmetry", "--env", env, "--samples", "200"], dir.path());
        assert_eq!(code(&out), 0, "{env}: {}", String::from_utf8_lossy(&out.stdout));
    }
    assert!(dir.path().join("symmetry_report.json").exists());
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let gamma = ppo_config("MASA", "x").replace(r#""eval_episodes": 2"#, r#""eval_episodes": 2, "ppo": {"gamma": 1.5}"#);
    let out = symmarl(&["train", &write_config(root, "gamma.json", &gamma)], root);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("gamma"), "{}", stderr(&out));

    let unknown = ppo_config("MASA", "x").replace(r#""seeds""#, r#""sedes": [1], "seeds""#);
    let out = symmarl(&["train", &write_config(root, "unknown.json", &unknown)], root);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("sedes"), "{}", stderr(&out));

    let out = symmarl(&["train", &write_config(root, "broken.json", "{\n\"env\": ")], root);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("line 2"), "{}", stderr(&out));

    assert_eq!(code(&symmarl(&["check-symmetry", "--env", "rotreach-3", "--checkpoint", "missing.ckpt"], root)), 2);
    assert_eq!(code(&symmarl(&["bogus"], root)), 2);
    assert!(!root.join("x").exists());
}

#[test]
fn aggregate_of_empty_directory_fails() {
    let dir = tempfile::tempdir().unwrap();
    fs::create_dir(dir.path().join("empty")).unwrap();
    let out = symmarl(&["aggregate", "empty"], dir.path());
    assert_eq!(code(&out), 2);
}

#[test]
fn dataset_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let cfg = r#"{
        "env": {"id": "thrusterpole"},
        "variant": "SA",
        "algorithm": "bc",
        "seeds": [0],
        "output_dir": "data",
        "dataset": {"generator": "expert", "episodes": 3, "seed": 4}
    }"#;
    let out = symmarl(&["make-dataset", &write_config(root, "ds.json", cfg)], root);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let path = root.join("data/thrusterpole-expert.jsonl");
    let ds = Dataset::load(&path).unwrap();

    let out = symmarl(&["augment", "data/thrusterpole-expert.jsonl"], root);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let aug = Dataset::load(root.join("data/thrusterpole-expert.augmented.jsonl")).unwrap();
    assert_eq!(aug.len(), 2 * ds.len());

    fs::write(root.join("bad.jsonl"), "{\"format\": \"nope\"}\n").unwrap();
    assert_eq!(code(&symmarl(&["augment", "bad.jsonl"], root)), 2);
}

#[test]
fn dataset_metadata_matches_fresh_evaluation() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let cfg = r#"{
        "env": {"id": "rotreach", "n": 3},
        "variant": "MASA",
        "algorithm": "bc",
        "seeds": [0],
        "output_dir": "data",
        "dataset": {"generator": "expert", "episodes": 100}
    }"#;
    assert_eq!(code(&symmarl(&["make-dataset", &write_config(root, "ds.json", cfg)], root)), 0);
    let ds = Dataset::load(root.join("data/rotreach3-expert.jsonl")).unwrap();
    let env = EnvConfig::rotreach(3);
    let expert = scripted_expert(&env, false).unwrap();
    let fresh = evaluate(&env, 100, 99, |o| Ok(expert(o))).unwrap();
    assert!((ds.meta.mean_success - fresh.success_rate).abs() <= 0.05, "{} vs {}", ds.meta.mean_success, fresh.success_rate);
}

#[test]
fn scripted_expert_evaluation() {
    let dir = tempfile::tempdir().unwrap();
    let out = symmarl(&["eval", "--expert", "--env", "rotreach-3", "--episodes", "50"], dir.path());
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let stdout = String::from_utf8_lossy(&out.stdout);
    let success: f64 = stdout.split("success ").nth(1).unwrap().trim().parse().unwrap();
    assert!(success >= 0.95, "{stdout}");
}

#[test]
fn output_root_relocates_relative_paths() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let cfg = write_config(root, "c.json", &ppo_config("MA", "rel"));
    let out = Command::new(env!("CARGO_BIN_EXE_symmarl"))
        .args(["train", &cfg])
        .current_dir(root)
        .env("SYMMARL_OUTPUT_ROOT", root.join("elsewhere"))
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(root.join("elsewhere/rel/ma-ppo-rotreach3_seed0.csv").exists());
    assert!(!root.join("rel").exists());
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut count = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            let cfg = symmarl::harness::RunConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            let again = symmarl::harness::RunConfig::from_json(&cfg.to_json(), &path).unwrap();
            assert_eq!(again, cfg);
            count += 1;
        }
    }
    assert!(count >= 5);
}
