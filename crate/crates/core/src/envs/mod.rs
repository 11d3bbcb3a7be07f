//! Exactly-symmetric toy environments.
//!
//! [`RotReach`] is rotationally symmetric (cyclic group over its arms) and
//! [`ThrusterPole`] is mirror symmetric. Both publish the [`SymmetrySpec`] of
//! their observation and action vectors, and their observation fully
//! describes the state, so a state can be rebuilt from a transformed
//! observation.

mod reward;
mod rotreach;
mod thrusterpole;

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use reward::{reward_combine, RewardTerms};
pub use rotreach::{rotreach_spec, RotReach, RotReachConfig, DT as REACH_DT, SUCCESS_RADIUS, TARGET_RADII};
pub use thrusterpole::{thrusterpole_spec, ThrusterPole, ThrusterPoleConfig};

use crate::error::{Error, Result};
use crate::symmetry::{SymmetrySpec, TransformSet};

/// Outcome of one environment step.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub obs: Vec<f64>,
    pub reward: f64,
    /// True terminal state (no bootstrapping).
    pub terminated: bool,
    /// Horizon reached.
    pub truncated: bool,
    pub success: bool,
}

impl Step {
    pub fn done(&self) -> bool {
        self.terminated || self.truncated
    }
}

pub trait Env: Send {
    fn spec(&self) -> &Arc<SymmetrySpec>;
    fn horizon(&self) -> usize;
    fn reset(&mut self, rng: &mut ChaCha8Rng) -> Vec<f64>;
    /// Puts the system in a random valid state (for symmetry probes).
    fn randomize_state(&mut self, rng: &mut ChaCha8Rng);
    fn observation(&self) -> Vec<f64>;
    fn set_from_observation(&mut self, o: &[f64]) -> Result<()>;
    fn step(&mut self, action: &[f64]) -> Result<Step>;
}

/// Environment section of a run config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvConfig {
    /// `rotreach` or `thrusterpole`.
    pub id: String,
    /// Number of arms (RotReach).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub link_lengths: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
}

impl EnvConfig {
    pub fn rotreach(n: usize) -> Self {
        Self {
            id: "rotreach".into(),
            n: Some(n),
            link_lengths: None,
            horizon: None,
        }
    }

    pub fn thrusterpole() -> Self {
        Self {
            id: "thrusterpole".into(),
            n: None,
            link_lengths: None,
            horizon: None,
        }
    }

    /// Parses ids such as `rotreach-3`, `rotreach` (three arms) or `thrusterpole`.
    pub fn from_id(env_id: &str) -> Result<Self> {
        match env_id.split_once('-') {
            Some(("rotreach", n)) => n.parse().map(Self::rotreach).map_err(|_| Error::UnknownEnv(env_id.into())),
            None if env_id == "rotreach" => Ok(Self::rotreach(3)),
            None if env_id == "thrusterpole" => Ok(Self::thrusterpole()),
            _ => Err(Error::UnknownEnv(env_id.into())),
        }
    }

    /// Resolved RotReach parameters, or `None` for other environments.
    pub fn rotreach_config(&self) -> Option<RotReachConfig> {
        (self.id == "rotreach").then(|| {
            let d = RotReachConfig::default();
            RotReachConfig {
                n: self.n.unwrap_or(d.n),
                links: self.link_lengths.unwrap_or(d.links),
                horizon: self.horizon.unwrap_or(d.horizon),
            }
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.build().map(|_| ())
    }

    pub fn build(&self) -> Result<Box<dyn Env>> {
        match self.id.as_str() {
            "rotreach" => Ok(Box::new(RotReach::new(self.rotreach_config().expect("rotreach id"))?)),
            "thrusterpole" => {
                if self.n.is_some_and(|n| n != 2) {
                    return Err(Error::config("env.n", "thrusterpole always has two thrusters"));
                }
                if self.link_lengths.is_some() {
                    return Err(Error::config("env.link_lengths", "not a thrusterpole parameter"));
                }
                let cfg = ThrusterPoleConfig {
                    horizon: self.horizon.unwrap_or(ThrusterPoleConfig::default().horizon),
                };
                Ok(Box::new(ThrusterPole::new(cfg)?))
            }
            other => Err(Error::UnknownEnv(other.into())),
        }
    }

    pub fn spec(&self) -> Result<SymmetrySpec> {
        Ok(self.build()?.spec().as_ref().clone())
    }
}

/// The symmetry spec published by an environment id.
pub fn env_symmetry_spec(env_id: &str) -> Result<SymmetrySpec> {
    EnvConfig::from_id(env_id)?.spec()
}

/// Largest residuals of the MDP symmetry step(T_i·s, T_i·a) = T_i·step(s, a).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CommutationReport {
    /// max ‖obs(step(T_i s, T_i a)) − T_i(obs(step(s, a)))‖∞
    pub observation: f64,
    /// max |r(T_i s, T_i a) − r(s, a)|
    pub reward: f64,
    /// Number of probes whose done/success flags disagreed.
    pub flag_mismatches: usize,
    pub probes: usize,
}

/// Probes random (state, action) pairs through every transform.
pub fn mdp_commutation(cfg: &EnvConfig, probes: usize, seed: u64) -> Result<CommutationReport> {
    let mut base = cfg.build()?;
    let mut mirror = cfg.build()?;
    let set = TransformSet::new(base.spec())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let act_width = base.spec().act_width();
    let mut report = CommutationReport::default();
    for i in 0..set.n() {
        for _ in 0..probes {
            base.randomize_state(&mut rng);
            let o = base.observation();
            let a: Vec<f64> = (0..act_width).map(|_| rng.random_range(-1.5..1.5)).collect();
            mirror.set_from_observation(&set.obs(i).apply(&o)?)?;
            let s1 = base.step(&a)?;
            let s2 = mirror.step(&set.act(i).apply(&a)?)?;
            let expected = set.obs(i).apply(&s1.obs)?;
            let diff = expected.iter().zip(&s2.obs).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            report.observation = report.observation.max(diff);
            report.reward = report.reward.max((s1.reward - s2.reward).abs());
            if (s1.terminated, s1.truncated, s1.success) != (s2.terminated, s2.truncated, s2.success) {
                report.flag_mismatches += 1;
            }
            report.probes += 1;
        }
    }
    Ok(report)
}
