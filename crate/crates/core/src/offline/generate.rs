use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::dataset::{Dataset, DatasetMeta, Transition};
use crate::envs::{EnvConfig, RotReachConfig, REACH_DT};
use crate::error::{Error, Result};
use crate::seeding::{stream, streams};
use crate::symmetry::rotation_for;

/// Behaviour policy used to generate a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum GeneratorKind {
    /// Scripted near-optimal controller.
    Expert,
    /// Expert that always steers arm 0 (RotReach only).
    AsymmetricExpert,
    /// Expert with heavy action noise.
    Weak,
    /// Expert on even episodes, weak on odd ones.
    HalfExpert,
    /// Expert and weak behaviour alternating in blocks of steps within each episode.
    WeakExpert,
    /// Expert with moderate action noise.
    Mixed,
}

pub const WEAK_NOISE: f64 = 5.0;
pub const MIXED_NOISE: f64 = 0.3;
/// Steps per block when alternating expert and weak behaviour.
pub const INTERLEAVE_BLOCK: usize = 10;

impl GeneratorKind {
    pub const ALL: [GeneratorKind; 6] = [
        GeneratorKind::Expert,
        GeneratorKind::AsymmetricExpert,
        GeneratorKind::Weak,
        GeneratorKind::HalfExpert,
        GeneratorKind::WeakExpert,
        GeneratorKind::Mixed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GeneratorKind::Expert => "expert",
            GeneratorKind::AsymmetricExpert => "asymmetric-expert",
            GeneratorKind::Weak => "weak",
            GeneratorKind::HalfExpert => "half-expert",
            GeneratorKind::WeakExpert => "weak-expert",
            GeneratorKind::Mixed => "mixed",
        }
    }

    /// Action noise σ at step `t` of episode `episode`.
    fn noise(self, episode: u64, t: usize) -> f64 {
        match self {
            GeneratorKind::Expert | GeneratorKind::AsymmetricExpert => 0.0,
            GeneratorKind::Weak => WEAK_NOISE,
            GeneratorKind::Mixed => MIXED_NOISE,
            GeneratorKind::HalfExpert => {
                if episode.is_multiple_of(2) {
                    0.0
                } else {
                    WEAK_NOISE
                }
            }
            GeneratorKind::WeakExpert => {
                if (t / INTERLEAVE_BLOCK).is_multiple_of(2) {
                    0.0
                } else {
                    WEAK_NOISE
                }
            }
        }
    }
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GeneratorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace(['_', '&'], "-");
        GeneratorKind::ALL
            .into_iter()
            .find(|k| k.name() == key)
            .ok_or_else(|| Error::UnknownPolicyKind(s.into()))
    }
}

impl TryFrom<String> for GeneratorKind {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<GeneratorKind> for String {
    fn from(k: GeneratorKind) -> String {
        k.name().into()
    }
}

fn wrap(a: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    a - tau * ((a + std::f64::consts::PI) / tau).floor()
}

/// Greedy inverse-kinematics controller for RotReach.
///
/// Steers the arm whose fingertip is nearest the target (or always `fixed_arm`)
/// straight towards the closest IK solution; the other arms stay still.
#[derive(Debug, Clone)]
pub struct ReachExpert {
    cfg: RotReachConfig,
    mounts: Vec<(f64, f64)>,
    pub fixed_arm: Option<usize>,
}

impl ReachExpert {
    pub fn new(cfg: RotReachConfig, fixed_arm: Option<usize>) -> Result<Self> {
        cfg.validate()?;
        if fixed_arm.is_some_and(|k| k >= cfg.n) {
            return Err(Error::config("arm", "fixed arm index out of range"));
        }
        let mounts = (0..cfg.n)
            .map(|k| {
                let (c, s) = rotation_for(k, cfg.n);
                (c, -s)
            })
            .collect();
        Ok(Self { cfg, mounts, fixed_arm })
    }

    fn local_target(&self, k: usize, target: [f64; 2]) -> [f64; 2] {
        let (c, s) = self.mounts[k];
        [c * target[0] + s * target[1], -s * target[0] + c * target[1]]
    }

    /// Joint angles reaching `t` (arm frame) closest to `q`.
    fn ik(&self, t: [f64; 2], q: [f64; 2]) -> [f64; 2] {
        let [l1, l2] = self.cfg.links;
        let c2 = ((t[0] * t[0] + t[1] * t[1] - l1 * l1 - l2 * l2) / (2.0 * l1 * l2)).clamp(-1.0, 1.0);
        let base = t[1].atan2(t[0]);
        [c2.acos(), -c2.acos()]
            .into_iter()
            .map(|q2| {
                let q1 = base - (l2 * q2.sin()).atan2(l1 + l2 * q2.cos());
                [q[0] + wrap(q1 - q[0]), q[1] + wrap(q2 - q[1])]
            })
            .min_by(|a, b| {
                let da = (a[0] - q[0]).abs().max((a[1] - q[1]).abs());
                let db = (b[0] - q[0]).abs().max((b[1] - q[1]).abs());
                da.total_cmp(&db)
            })
            .expect("two solutions")
    }

    pub fn act(&self, obs: &[f64]) -> Vec<f64> {
        let n = self.cfg.n;
        let target = [obs[4 * n], obs[4 * n + 1]];
        let [l1, l2] = self.cfg.links;
        let q = |k: usize| [obs[4 * k], obs[4 * k + 1]];
        let arm = self.fixed_arm.unwrap_or_else(|| {
            (0..n)
                .map(|k| {
                    let [q1, q2] = q(k);
                    let tip = [l1 * q1.cos() + l2 * (q1 + q2).cos(), l1 * q1.sin() + l2 * (q1 + q2).sin()];
                    let t = self.local_target(k, target);
                    (k, (tip[0] - t[0]).hypot(tip[1] - t[1]))
                })
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("at least one arm")
                .0
        });
        let goal = self.ik(self.local_target(arm, target), q(arm));
        let mut action = vec![0.0; 2 * n];
        for d in 0..2 {
            action[2 * arm + d] = ((goal[d] - q(arm)[d]) / REACH_DT).clamp(-1.0, 1.0);
        }
        action
    }
}

/// Linear balancing controller for ThrusterPole using the cart and both thrusters.
pub fn pole_expert(obs: &[f64]) -> Vec<f64> {
    let [x, xd, th, thd] = [obs[0], obs[1], obs[2], obs[3]];
    let push = 2.0 * th + 0.5 * thd + 0.05 * x + 0.1 * xd;
    let tip = -(3.0 * th + 0.5 * thd);
    vec![push.clamp(-1.0, 1.0), (-tip).clamp(0.0, 1.0), tip.clamp(0.0, 1.0)]
}

pub type ExpertFn = Box<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Scripted expert for an environment.
pub fn scripted_expert(env: &EnvConfig, asymmetric: bool) -> Result<ExpertFn> {
    match env.rotreach_config() {
        Some(cfg) => {
            let expert = ReachExpert::new(cfg, asymmetric.then_some(0))?;
            Ok(Box::new(move |o| expert.act(o)))
        }
        None if asymmetric => Err(Error::Unsupported(format!("no asymmetric expert for `{}`", env.id))),
        None if env.id == "thrusterpole" => Ok(Box::new(pole_expert)),
        None => Err(Error::UnknownEnv(env.id.clone())),
    }
}

/// Rolls out the generator policy for `episodes` episodes.
pub fn generate_dataset(env: &EnvConfig, kind: GeneratorKind, episodes: usize, seed: u64) -> Result<Dataset> {
    if episodes == 0 {
        return Err(Error::config("episodes", "must be at least 1"));
    }
    let expert = scripted_expert(env, kind == GeneratorKind::AsymmetricExpert)?;
    let mut e = env.build()?;
    let mut rng = stream(seed, streams::DATASET);
    let mut transitions = Vec::new();
    let (mut successes, mut total_return) = (0usize, 0.0);
    for ep in 0..episodes as u64 {
        let mut obs = e.reset(&mut rng);
        let mut t = 0;
        loop {
            let sigma = kind.noise(ep, t);
            let mut action = expert(&obs);
            if sigma > 0.0 {
                for a in action.iter_mut() {
                    let eps: f64 = rng.sample(StandardNormal);
                    *a += sigma * eps;
                }
            }
            let step = e.step(&action)?;
            total_return += step.reward;
            let done = step.done();
            transitions.push(Transition {
                obs,
                action,
                reward: step.reward,
                next_obs: step.obs.clone(),
                done,
                terminal: step.terminated,
                episode: ep,
            });
            t += 1;
            if done {
                successes += usize::from(step.success);
                break;
            }
            obs = step.obs;
        }
    }
    let meta = DatasetMeta {
        env: env.clone(),
        generator: kind.name().into(),
        seed,
        episodes: episodes as u64,
        mean_success: successes as f64 / episodes as f64,
        mean_return: total_return / episodes as f64,
    };
    Dataset::new(meta, transitions)
}
