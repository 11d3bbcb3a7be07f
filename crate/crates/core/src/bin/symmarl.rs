use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use symmarl::envs::EnvConfig;
use symmarl::harness::{self, RunConfig};
use symmarl::Error;

/// Symmetry-aware multi-agent RL experiments.
#[derive(Parser)]
#[command(name = "symmarl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// Run config (JSON).
    #[arg(long = "config", value_name = "PATH")]
    flag: Option<PathBuf>,
    #[arg(value_name = "CONFIG", conflicts_with = "flag")]
    positional: Option<PathBuf>,
}

impl ConfigArg {
    fn path(&self) -> Option<&Path> {
        self.flag.as_deref().or(self.positional.as_deref())
    }

    fn load(&self) -> Result<RunConfig, Error> {
        match self.path() {
            Some(p) => RunConfig::load(p),
            None => Err(Error::config("config", "pass a config path (positional or --config)")),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train every seed of a config.
    Train(ConfigArg),
    /// Evaluate a checkpoint (or the scripted expert) deterministically.
    Eval {
        /// Checkpoint file; its `.spec.json` sidecar must sit next to it.
        checkpoint: Option<PathBuf>,
        /// Take the checkpoint and env from a config.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Environment id, e.g. rotreach-3 (defaults to the checkpoint's).
        #[arg(long)]
        env: Option<String>,
        #[arg(long, default_value_t = 20)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Evaluate the scripted expert instead of a checkpoint.
        #[arg(long, conflicts_with = "checkpoint")]
        expert: bool,
        /// With --expert: the expert that only moves arm 0.
        #[arg(long, requires = "expert")]
        asymmetric: bool,
        /// Write the result as a one-row metrics CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a scripted dataset described by a config.
    MakeDataset(ConfigArg),
    /// Add every symmetric copy of each transition in a dataset.
    Augment {
        dataset: PathBuf,
        /// Defaults to `<stem>.augmented.jsonl` next to the input.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check group axioms, dynamics symmetry and (with a checkpoint) network residuals.
    CheckSymmetry {
        #[command(flatten)]
        config: ConfigArg,
        /// Environment id instead of a config.
        #[arg(long)]
        env: Option<String>,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Report file; defaults to `symmetry_report.json` in the output directory.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Median and quartiles across seeds for every run in a directory.
    Aggregate {
        run_dir: PathBuf,
        /// Defaults to `<run_dir>/summary.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn usage_error(e: &Error) -> bool {
    matches!(
        e,
        Error::Config { .. } | Error::Format { .. } | Error::UnknownEnv(_) | Error::UnknownVariant(_) | Error::UnknownPolicyKind(_) | Error::Json(_) | Error::Io(_)
    )
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Train(arg) => {
            let cfg = arg.load()?;
            let report = harness::cmd_train(&cfg)?;
            for o in &report.outcomes {
                let fmt = |x: Option<f64>| x.map_or("-".into(), |v| format!("{v:.3}"));
                println!(
                    "seed {}: return {} success {} -> {}",
                    o.seed,
                    fmt(o.final_return),
                    fmt(o.final_success),
                    o.metrics.display()
                );
                if let Some(e) = &o.eval {
                    println!("seed {}: eval return {:.3} success {:.3}", o.seed, e.mean_return, e.success_rate);
                }
            }
            for (seed, msg) in &report.failures {
                eprintln!("seed {seed} failed: {msg}");
            }
            Ok(if report.failures.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Eval {
            checkpoint,
            config,
            env,
            episodes,
            seed,
            expert,
            asymmetric,
            out,
        } => {
            let cfg = config.as_deref().map(RunConfig::load).transpose()?;
            let env = match (env, &cfg) {
                (Some(id), _) => Some(EnvConfig::from_id(&id)?),
                (None, Some(c)) => Some(c.env.clone()),
                (None, None) => None,
            };
            let report = if expert {
                let env = env.ok_or_else(|| Error::config("env", "--expert needs --env or --config"))?;
                harness::cmd_eval_expert(&env, asymmetric, episodes, seed, out.as_deref())?
            } else {
                let ck = checkpoint
                    .or_else(|| cfg.as_ref().and_then(RunConfig::checkpoint_path))
                    .ok_or_else(|| Error::config("checkpoint", "pass a checkpoint path or --expert"))?;
                harness::cmd_eval(&ck, env.as_ref(), episodes, seed, out.as_deref())?
            };
            println!(
                "episodes {} return {:.4} success {:.4}",
                report.episodes, report.mean_return, report.success_rate
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::MakeDataset(arg) => {
            let cfg = arg.load()?;
            let (path, ds) = harness::cmd_make_dataset(&cfg)?;
            println!(
                "{} transitions, {} episodes, success {:.3}, return {:.3} -> {}",
                ds.len(),
                ds.meta.episodes,
                ds.meta.mean_success,
                ds.meta.mean_return,
                path.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Augment { dataset, out } => {
            let (path, ds) = harness::cmd_augment(&dataset, out.as_deref())?;
            println!("{} transitions -> {}", ds.len(), path.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::CheckSymmetry {
            config,
            env,
            checkpoint,
            samples,
            seed,
            report,
        } => {
            let cfg = config.path().map(RunConfig::load).transpose()?;
            let env = match (env, &cfg) {
                (Some(id), _) => EnvConfig::from_id(&id)?,
                (None, Some(c)) => c.env.clone(),
                (None, None) => return Err(Error::config("env", "pass --env or a config")),
            };
            let checkpoint = checkpoint.or_else(|| cfg.as_ref().and_then(RunConfig::checkpoint_path));
            if let Some(ck) = &checkpoint {
                if !ck.exists() {
                    return Err(Error::config("checkpoint", format!("{} does not exist", ck.display())));
                }
            }
            let result = harness::check_symmetry(&env, checkpoint.as_deref(), samples, seed)?;
            let path = report.unwrap_or_else(|| match &cfg {
                Some(c) => c.output_dir().join("symmetry_report.json"),
                None => PathBuf::from("symmetry_report.json"),
            });
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(&path, serde_json::to_string_pretty(&result)? + "\n")?;
            for c in &result.checks {
                println!(
                    "{:<24} {:>12.3e} <= {:<8.1e} {}",
                    c.name,
                    c.max_residual,
                    c.tolerance,
                    if c.pass { "ok" } else { "VIOLATED" }
                );
            }
            println!("report -> {}", path.display());
            Ok(if result.pass { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Aggregate { run_dir, out } => {
            let (path, report) = harness::cmd_aggregate(&run_dir, out.as_deref())?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            println!("{} rows -> {}", report.rows.len(), path.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if usage_error(&e) { 2 } else { 1 })
        }
    }
}
