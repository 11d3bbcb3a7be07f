use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{Algorithm, RunConfig};
use crate::envs::{mdp_commutation, EnvConfig};
use crate::error::{Error, Result};
use crate::eval::{evaluate, EvalReport};
use crate::masa::{critic_residual, policy_residuals};
use crate::metrics::{read_metrics, MetricsRow, MetricsWriter, Phase, HEADER};
use crate::net::Checkpoint;
use crate::offline::{augment_symmetric, evaluate_agent, generate_dataset, scripted_expert, train_offline, Dataset};
use crate::online::{train_online, Agent, NetConfig, OnlineConfig, Variant};
use crate::symmetry::{verify_group_axioms, SymmetrySpec, TransformSet};

pub const SIDECAR_FORMAT: &str = "symmarl-checkpoint";
pub const AXIOM_TOLERANCE: f64 = 1e-12;
pub const DYNAMICS_TOLERANCE: f64 = 1e-8;
pub const NETWORK_TOLERANCE: f64 = 1e-6;

/// Sidecar written next to every checkpoint (`<checkpoint>.spec.json`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointSidecar {
    pub format: String,
    pub run_id: String,
    pub env: EnvConfig,
    pub variant: Variant,
    pub algorithm: Algorithm,
    pub seed: u64,
    pub nets: NetConfig,
    pub obs_width: usize,
    pub act_width: usize,
}

pub fn sidecar_path(checkpoint: &Path) -> PathBuf {
    let mut name = checkpoint.as_os_str().to_owned();
    name.push(".spec.json");
    PathBuf::from(name)
}

/// Writes an agent checkpoint plus its sidecar.
pub fn save_agent(agent: &Agent, path: &Path, sidecar: &CheckpointSidecar) -> Result<()> {
    agent.to_checkpoint().save(path)?;
    fs::write(sidecar_path(path), serde_json::to_string_pretty(sidecar)? + "\n")?;
    Ok(())
}

/// Loads a checkpoint and rebuilds its agent from the sidecar's environment.
pub fn load_agent(path: &Path) -> Result<(Agent, CheckpointSidecar)> {
    let side_path = sidecar_path(path);
    let text = fs::read_to_string(&side_path).map_err(|e| Error::Format {
        path: side_path.clone(),
        reason: format!("cannot read checkpoint sidecar: {e}"),
    })?;
    let sidecar: CheckpointSidecar = serde_json::from_str(&text).map_err(|e| Error::Format {
        path: side_path.clone(),
        reason: e.to_string(),
    })?;
    if sidecar.format != SIDECAR_FORMAT {
        return Err(Error::Format {
            path: side_path,
            reason: format!("unexpected format `{}`", sidecar.format),
        });
    }
    let spec = sidecar.env.spec()?;
    if spec.obs_width() != sidecar.obs_width || spec.act_width() != sidecar.act_width {
        return Err(Error::Format {
            path: side_path,
            reason: "widths do not match the environment".into(),
        });
    }
    let agent = Agent::from_checkpoint(&Checkpoint::load(path)?, &spec)?;
    if agent.variant != sidecar.variant {
        return Err(Error::Format {
            path: path.to_path_buf(),
            reason: format!("checkpoint variant {} disagrees with sidecar {}", agent.variant, sidecar.variant),
        });
    }
    Ok((agent, sidecar))
}

#[derive(Debug, Clone)]
pub struct SeedOutcome {
    pub seed: u64,
    pub metrics: PathBuf,
    pub checkpoint: PathBuf,
    pub final_return: Option<f64>,
    pub final_success: Option<f64>,
    pub eval: Option<EvalReport>,
}

#[derive(Debug, Clone, Default)]
pub struct TrainReport {
    pub outcomes: Vec<SeedOutcome>,
    pub failures: Vec<(u64, String)>,
}

fn load_or_generate_dataset(cfg: &RunConfig) -> Result<Dataset> {
    let path = cfg.dataset_path();
    if path.exists() {
        info!("loading dataset {}", path.display());
        let ds = Dataset::load(&path)?;
        if ds.meta.env != cfg.env {
            return Err(Error::config("dataset.path", format!("dataset was generated for {:?}", ds.meta.env)));
        }
        Ok(ds)
    } else {
        info!("generating {} dataset ({} episodes) in memory", cfg.dataset.generator, cfg.dataset.episodes);
        generate_dataset(&cfg.env, cfg.dataset.generator, cfg.dataset.episodes, cfg.dataset.seed)
    }
}

fn train_seed(cfg: &RunConfig, seed: u64, dataset: Option<&Dataset>) -> Result<SeedOutcome> {
    let out = cfg.output_dir();
    let run_id = cfg.run_id();
    let metrics = out.join(format!("{run_id}_seed{seed}.csv"));
    let checkpoint = out.join(format!("{run_id}_seed{seed}.ckpt"));
    let mut writer = MetricsWriter::create(&metrics)?;
    let mut log = |row: &MetricsRow| writer.write(row);
    let (agent, rows, eval) = match dataset {
        None => {
            let online = OnlineConfig {
                env: cfg.env.clone(),
                variant: cfg.variant,
                ppo: cfg.ppo.clone(),
                nets: cfg.nets.clone(),
                schedule: cfg.schedule.clone(),
                eval_episodes: cfg.eval_episodes,
            };
            let o = train_online(&online, seed, &run_id, &mut log)?;
            (o.agent, o.rows, o.eval)
        }
        Some(ds) => {
            let o = train_offline(ds, cfg.variant, &cfg.nets, &cfg.offline, cfg.eval_episodes, seed, &run_id, &mut log)?;
            (o.agent, o.rows, o.eval)
        }
    };
    writer.flush()?;
    let spec = agent.spec();
    save_agent(
        &agent,
        &checkpoint,
        &CheckpointSidecar {
            format: SIDECAR_FORMAT.into(),
            run_id,
            env: cfg.env.clone(),
            variant: cfg.variant,
            algorithm: cfg.algorithm,
            seed,
            nets: cfg.nets.clone(),
            obs_width: spec.obs_width(),
            act_width: spec.act_width(),
        },
    )?;
    let last = rows.iter().rev().find(|r| r.phase == Phase::Train);
    Ok(SeedOutcome {
        seed,
        metrics,
        checkpoint,
        final_return: last.and_then(|r| r.episodic_return_mean),
        final_success: last.and_then(|r| r.success_rate),
        eval,
    })
}

/// Trains every seed of `cfg`; one metrics CSV and one checkpoint per seed.
pub fn cmd_train(cfg: &RunConfig) -> Result<TrainReport> {
    let out = cfg.output_dir();
    fs::create_dir_all(&out)?;
    fs::write(out.join(format!("{}.config.json", cfg.run_id())), cfg.to_json() + "\n")?;
    let dataset = match cfg.algorithm {
        Algorithm::Ppo => None,
        Algorithm::Bc | Algorithm::Iql => Some(load_or_generate_dataset(cfg)?),
    };
    let mut report = TrainReport::default();
    for &seed in &cfg.seeds {
        info!("{}: seed {seed}", cfg.run_id());
        match train_seed(cfg, seed, dataset.as_ref()) {
            Ok(o) => report.outcomes.push(o),
            Err(e) => {
                warn!("seed {seed} failed: {e}");
                report.failures.push((seed, e.to_string()));
            }
        }
    }
    Ok(report)
}

/// Deterministic evaluation of a checkpoint (optionally on a different env
/// configuration), written as one eval row to `out` when given.
pub fn cmd_eval(checkpoint: &Path, env: Option<&EnvConfig>, episodes: usize, seed: u64, out: Option<&Path>) -> Result<EvalReport> {
    let (agent, sidecar) = load_agent(checkpoint)?;
    let env = env.unwrap_or(&sidecar.env);
    if env.spec()? != *agent.spec() {
        return Err(Error::config("env", "environment layout differs from the checkpoint's"));
    }
    let report = evaluate_agent(&agent, env, episodes, seed)?;
    if let Some(path) = out {
        write_eval_row(path, &sidecar.run_id, seed, &report)?;
    }
    Ok(report)
}

/// Deterministic evaluation of the environment's scripted expert.
pub fn cmd_eval_expert(env: &EnvConfig, asymmetric: bool, episodes: usize, seed: u64, out: Option<&Path>) -> Result<EvalReport> {
    let expert = scripted_expert(env, asymmetric)?;
    let report = evaluate(env, episodes, seed, |o| Ok(expert(o)))?;
    if let Some(path) = out {
        write_eval_row(path, "scripted-expert", seed, &report)?;
    }
    Ok(report)
}

fn write_eval_row(path: &Path, run_id: &str, seed: u64, report: &EvalReport) -> Result<()> {
    let mut row = MetricsRow::new(run_id, seed, Phase::Eval, 0);
    row.episodic_return_mean = Some(report.mean_return);
    row.success_rate = Some(report.success_rate);
    let mut w = MetricsWriter::create(path)?;
    w.write(&row)?;
    w.flush()
}

/// Generates the configured dataset and writes it; returns the path.
pub fn cmd_make_dataset(cfg: &RunConfig) -> Result<(PathBuf, Dataset)> {
    let ds = generate_dataset(&cfg.env, cfg.dataset.generator, cfg.dataset.episodes, cfg.dataset.seed)?;
    let path = cfg.dataset_path();
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    ds.save(&path)?;
    Ok((path, ds))
}

/// Writes the symmetric augmentation of a dataset file.
pub fn cmd_augment(input: &Path, output: Option<&Path>) -> Result<(PathBuf, Dataset)> {
    let ds = Dataset::load(input)?;
    let aug = augment_symmetric(&ds)?;
    let path = match output {
        Some(p) => p.to_path_buf(),
        None => {
            let stem = input.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            input.with_file_name(format!("{stem}.augmented.jsonl"))
        }
    };
    aug.save(&path)?;
    Ok((path, aug))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyCheck {
    pub name: String,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetryReport {
    pub env: EnvConfig,
    pub checkpoint: Option<PathBuf>,
    pub checks: Vec<PropertyCheck>,
    pub pass: bool,
}

impl SymmetryReport {
    fn push(&mut self, name: &str, residual: f64, tolerance: f64) {
        let pass = residual <= tolerance;
        self.pass &= pass;
        self.checks.push(PropertyCheck {
            name: name.into(),
            max_residual: residual,
            tolerance,
            pass,
        });
    }
}

/// Group axioms and MDP commutation of the environment, plus equivariance and
/// invariance residuals of a trained checkpoint when one is given.
pub fn check_symmetry(env: &EnvConfig, checkpoint: Option<&Path>, samples: usize, seed: u64) -> Result<SymmetryReport> {
    let spec = env.spec()?;
    let set = TransformSet::new(&spec)?;
    let mut report = SymmetryReport {
        env: env.clone(),
        checkpoint: checkpoint.map(Path::to_path_buf),
        checks: Vec::new(),
        pass: true,
    };
    let axioms = verify_group_axioms(&set, samples, seed);
    report.push("axiom.commutativity", axioms.commutativity, AXIOM_TOLERANCE);
    report.push("axiom.distributivity", axioms.distributivity, AXIOM_TOLERANCE);
    report.push("axiom.cyclicity", axioms.cyclicity, AXIOM_TOLERANCE);
    report.push("axiom.orthogonality", axioms.orthogonality, AXIOM_TOLERANCE);
    let mdp = mdp_commutation(env, samples, seed)?;
    report.push("dynamics.observation", mdp.observation, DYNAMICS_TOLERANCE);
    report.push("dynamics.reward", mdp.reward, DYNAMICS_TOLERANCE);
    report.push("dynamics.flags", mdp.flag_mismatches as f64, 0.0);

    if let Some(path) = checkpoint {
        let (agent, sidecar) = load_agent(path)?;
        if sidecar.env.spec()? != spec {
            return Err(Error::config("checkpoint", "checkpoint was trained on a different layout"));
        }
        let probes = network_probes(env, &agent, samples.clamp(1, 100), seed)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pol = policy_residuals(&agent.policy, &set, &probes, &mut rng)?;
        report.push("policy.agent", pol.agent, NETWORK_TOLERANCE);
        report.push("policy.central", pol.central, NETWORK_TOLERANCE);
        report.push("policy.log_density", pol.log_density, NETWORK_TOLERANCE);
        report.push("critic.invariance", critic_residual(&agent.critic, &set, &probes, None)?, NETWORK_TOLERANCE);
        report.push("normalizer.commutation", normalizer_residual(&agent, &set, env, samples.clamp(1, 100), seed)?, NETWORK_TOLERANCE);
    }
    Ok(report)
}

fn random_states(env: &EnvConfig, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let mut e = env.build()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count)
        .map(|_| {
            e.randomize_state(&mut rng);
            e.observation()
        })
        .collect())
}

/// Normalized observations of random states: the inputs the networks see.
fn network_probes(env: &EnvConfig, agent: &Agent, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let raw = random_states(env, count, seed)?;
    let w = agent.spec().obs_width();
    let rows = Array2::from_shape_vec((raw.len(), w), raw.concat()).expect("rectangular");
    Ok(agent.obs_norm.normalize(rows.view()).rows().into_iter().map(|r| r.to_vec()).collect())
}

/// max |norm(T_i(o)) − T_i(norm(o))|
fn normalizer_residual(agent: &Agent, set: &TransformSet, env: &EnvConfig, count: usize, seed: u64) -> Result<f64> {
    let w = set.spec().obs_width();
    let mut worst: f64 = 0.0;
    for o in random_states(env, count, seed)? {
        let row = |v: &[f64]| Array2::from_shape_vec((1, w), v.to_vec()).expect("row");
        let n = agent.obs_norm.normalize(row(&o).view()).row(0).to_vec();
        for i in 1..set.n() {
            let a = agent.obs_norm.normalize(row(&set.obs(i).apply(&o)?).view()).row(0).to_vec();
            let b = set.obs(i).apply(&n)?;
            worst = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(worst, f64::max);
        }
    }
    Ok(worst)
}

/// Per-step summary of one run across seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub run_id: String,
    pub phase: Phase,
    pub step: u64,
    pub seeds: usize,
    pub return_median: Option<f64>,
    pub return_p25: Option<f64>,
    pub return_p75: Option<f64>,
    pub success_median: Option<f64>,
    pub success_p25: Option<f64>,
    pub success_p75: Option<f64>,
}

/// Quantile of sorted data with linear interpolation between closest ranks
/// (position q·(n − 1)).
pub fn quantile_linear(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Some(sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo]))
}

fn quartiles(values: impl Iterator<Item = Option<f64>>) -> [Option<f64>; 3] {
    let mut v: Vec<f64> = values.flatten().collect();
    v.sort_by(f64::total_cmp);
    [quantile_linear(&v, 0.5), quantile_linear(&v, 0.25), quantile_linear(&v, 0.75)]
}

#[derive(Debug, Clone, Default)]
pub struct AggregateReport {
    pub rows: Vec<SummaryRow>,
    pub warnings: Vec<String>,
}

fn is_metrics_csv(path: &Path) -> bool {
    let Ok(text) = fs::read_to_string(path) else { return false };
    text.lines().next().is_some_and(|h| h.split(',').eq(HEADER.iter().copied()))
}

/// Median and quartiles across seeds for every run found in `dir`. Curves of
/// unequal length are truncated to the shortest.
pub fn aggregate(dir: &Path) -> Result<AggregateReport> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv") && is_metrics_csv(p))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::config("run_dir", format!("no metrics CSV files in {}", dir.display())));
    }
    // run id → phase → seed → rows
    let mut runs: BTreeMap<String, BTreeMap<(u8, u64), Vec<MetricsRow>>> = BTreeMap::new();
    for f in &files {
        for row in read_metrics(f)? {
            let phase_key = u8::from(row.phase == Phase::Eval);
            runs.entry(row.run_id.clone()).or_default().entry((phase_key, row.seed)).or_default().push(row);
        }
    }
    let mut report = AggregateReport::default();
    for (run_id, by_seed) in runs {
        for phase in [Phase::Train, Phase::Eval] {
            let key = u8::from(phase == Phase::Eval);
            let curves: Vec<&Vec<MetricsRow>> = by_seed.iter().filter(|((p, _), _)| *p == key).map(|(_, v)| v).collect();
            if curves.is_empty() {
                continue;
            }
            let shortest = curves.iter().map(|c| c.len()).min().expect("non-empty");
            if curves.iter().any(|c| c.len() != shortest) {
                let msg = format!("{run_id} ({phase:?}): seed curves differ in length; truncated to {shortest} rows");
                warn!("{msg}");
                report.warnings.push(msg);
            }
            for k in 0..shortest {
                let step = curves[0][k].step;
                if curves.iter().any(|c| c[k].step != step) {
                    let msg = format!("{run_id}: seeds disagree on the step of row {k}; using {step}");
                    warn!("{msg}");
                    report.warnings.push(msg);
                }
                let [rm, r25, r75] = quartiles(curves.iter().map(|c| c[k].episodic_return_mean));
                let [sm, s25, s75] = quartiles(curves.iter().map(|c| c[k].success_rate));
                report.rows.push(SummaryRow {
                    run_id: run_id.clone(),
                    phase,
                    step,
                    seeds: curves.len(),
                    return_median: rm,
                    return_p25: r25,
                    return_p75: r75,
                    success_median: sm,
                    success_p25: s25,
                    success_p75: s75,
                });
            }
        }
    }
    Ok(report)
}

/// Aggregates `dir` and writes the summary CSV (default `<dir>/summary.csv`).
pub fn cmd_aggregate(dir: &Path, out: Option<&Path>) -> Result<(PathBuf, AggregateReport)> {
    let report = aggregate(dir)?;
    let path = out.map(Path::to_path_buf).unwrap_or_else(|| dir.join("summary.csv"));
    let mut w = csv::Writer::from_path(&path)?;
    for row in &report.rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok((path, report))
}

/// The spec a checkpoint was trained on.
pub fn checkpoint_spec(path: &Path) -> Result<SymmetrySpec> {
    Ok(load_agent(path)?.0.spec().clone())
}
