use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::reward::reward_combine;
use super::{Env, Step};
use crate::error::{Error, Result};
use crate::symmetry::{rotation_for, Block, BlockLayout, GroupKind, SymmetrySpec};

pub const DT: f64 = 0.05;
pub const SUCCESS_RADIUS: f64 = 0.05;
pub const TARGET_RADII: (f64, f64) = (0.35, 0.85);
const WEIGHTS: [(&str, f64); 2] = [("task", 1.0), ("action", -0.01)];

#[derive(Debug, Clone, PartialEq)]
pub struct RotReachConfig {
    pub n: usize,
    pub links: [f64; 2],
    pub horizon: usize,
}

impl Default for RotReachConfig {
    fn default() -> Self {
        Self {
            n: 3,
            links: [0.6, 0.4],
            horizon: 200,
        }
    }
}

impl RotReachConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=6).contains(&self.n) {
            return Err(Error::config("n", format!("arm count must be in 1..=6, got {}", self.n)));
        }
        if self.links.iter().any(|l| !l.is_finite() || *l <= 0.0) {
            return Err(Error::config("link_lengths", "link lengths must be positive"));
        }
        let (lo, hi) = TARGET_RADII;
        if (self.links[0] - self.links[1]).abs() > lo || self.links[0] + self.links[1] < hi {
            return Err(Error::config("link_lengths", "target annulus must be reachable by every arm"));
        }
        if self.horizon == 0 {
            return Err(Error::config("horizon", "must be at least 1"));
        }
        Ok(())
    }
}

/// Symmetry spec of RotReach with `n` arms.
pub fn rotreach_spec(n: usize) -> Result<SymmetrySpec> {
    let mut obs: Vec<Block> = (0..n).map(|k| Block::agent(format!("arm{k}"), 4)).collect();
    obs.push(Block::rotated("target", 2, vec![(0, 1)]));
    let act = (0..n).map(|k| Block::agent(format!("cmd{k}"), 2)).collect();
    SymmetrySpec::new(GroupKind::Cyclic(n), BlockLayout::new(obs)?, BlockLayout::new(act)?)
}

/// N kinematic two-link planar arms sharing a base; the nearest fingertip
/// must reach a target point.
///
/// Arm k is mounted along angle 2πk/N. Joint velocities are commanded
/// directly and clamped to [−1, 1].
#[derive(Debug, Clone)]
pub struct RotReach {
    cfg: RotReachConfig,
    spec: Arc<SymmetrySpec>,
    /// (cos, sin) of each mount angle.
    mounts: Vec<(f64, f64)>,
    q: Vec<[f64; 2]>,
    qd: Vec<[f64; 2]>,
    target: [f64; 2],
    steps: usize,
}

impl RotReach {
    pub fn new(cfg: RotReachConfig) -> Result<Self> {
        cfg.validate()?;
        let spec = Arc::new(rotreach_spec(cfg.n)?);
        // mount angle 2πk/N is −θ_k
        let mounts = (0..cfg.n)
            .map(|k| {
                let (c, s) = rotation_for(k, cfg.n);
                (c, -s)
            })
            .collect();
        Ok(Self {
            q: vec![[0.0; 2]; cfg.n],
            qd: vec![[0.0; 2]; cfg.n],
            target: [TARGET_RADII.0, 0.0],
            steps: 0,
            cfg,
            spec,
            mounts,
        })
    }

    pub fn config(&self) -> &RotReachConfig {
        &self.cfg
    }

    pub fn target(&self) -> [f64; 2] {
        self.target
    }

    pub fn set_target(&mut self, target: [f64; 2]) {
        self.target = target;
    }

    pub fn joint_angles(&self) -> &[[f64; 2]] {
        &self.q
    }

    /// Mount direction (cos, sin) of arm k.
    pub fn mount(&self, k: usize) -> (f64, f64) {
        self.mounts[k]
    }

    /// Target expressed in arm k's mount frame.
    pub fn local_target(&self, k: usize) -> [f64; 2] {
        let (c, s) = self.mounts[k];
        let [x, y] = self.target;
        [c * x + s * y, -s * x + c * y]
    }

    /// Fingertip of arm k in its mount frame.
    pub fn local_tip(&self, k: usize) -> [f64; 2] {
        let [l1, l2] = self.cfg.links;
        let [q1, q2] = self.q[k];
        [l1 * q1.cos() + l2 * (q1 + q2).cos(), l1 * q1.sin() + l2 * (q1 + q2).sin()]
    }

    /// Fingertip of arm k in the world frame.
    pub fn tip(&self, k: usize) -> [f64; 2] {
        let (c, s) = self.mounts[k];
        let [x, y] = self.local_tip(k);
        [c * x - s * y, s * x + c * y]
    }

    /// Distance from each fingertip to the target, measured in the arm frame.
    pub fn distances(&self) -> Vec<f64> {
        (0..self.cfg.n)
            .map(|k| {
                let tip = self.local_tip(k);
                let t = self.local_target(k);
                (tip[0] - t[0]).hypot(tip[1] - t[1])
            })
            .collect()
    }

    pub fn min_distance(&self) -> f64 {
        self.distances().into_iter().fold(f64::INFINITY, f64::min)
    }

    fn sample_target(rng: &mut ChaCha8Rng) -> [f64; 2] {
        let (lo, hi) = TARGET_RADII;
        // uniform over the annulus area
        let r = rng.random_range(lo * lo..hi * hi).sqrt();
        let phi = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
        [r * phi.cos(), r * phi.sin()]
    }
}

impl Env for RotReach {
    fn spec(&self) -> &Arc<SymmetrySpec> {
        &self.spec
    }

    fn horizon(&self) -> usize {
        self.cfg.horizon
    }

    fn reset(&mut self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        self.q.iter_mut().for_each(|q| *q = [0.0; 2]);
        self.qd.iter_mut().for_each(|q| *q = [0.0; 2]);
        self.target = Self::sample_target(rng);
        self.steps = 0;
        self.observation()
    }

    fn randomize_state(&mut self, rng: &mut ChaCha8Rng) {
        let pi = std::f64::consts::PI;
        for k in 0..self.cfg.n {
            self.q[k] = [rng.random_range(-pi..pi), rng.random_range(-pi..pi)];
            self.qd[k] = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        }
        self.target = Self::sample_target(rng);
        self.steps = 0;
    }

    fn observation(&self) -> Vec<f64> {
        let mut o = Vec::with_capacity(4 * self.cfg.n + 2);
        for k in 0..self.cfg.n {
            o.extend_from_slice(&[self.q[k][0], self.q[k][1], self.qd[k][0], self.qd[k][1]]);
        }
        o.extend_from_slice(&self.target);
        o
    }

    fn set_from_observation(&mut self, o: &[f64]) -> Result<()> {
        self.spec.obs_layout().check_len(o.len(), "rotreach observation")?;
        for k in 0..self.cfg.n {
            let a = &o[4 * k..4 * k + 4];
            self.q[k] = [a[0], a[1]];
            self.qd[k] = [a[2], a[3]];
        }
        let n = 4 * self.cfg.n;
        self.target = [o[n], o[n + 1]];
        self.steps = 0;
        Ok(())
    }

    fn step(&mut self, action: &[f64]) -> Result<Step> {
        self.spec.act_layout().check_len(action.len(), "rotreach action")?;
        let mut per_arm = Vec::with_capacity(self.cfg.n);
        for k in 0..self.cfg.n {
            let u = [action[2 * k].clamp(-1.0, 1.0), action[2 * k + 1].clamp(-1.0, 1.0)];
            per_arm.push(u[0] * u[0] + u[1] * u[1]);
            self.qd[k] = u;
            for (q, ud) in self.q[k].iter_mut().zip(u) {
                *q += DT * ud;
            }
        }
        // summed in sorted order so relabelling the arms cannot change the rounding
        per_arm.sort_by(f64::total_cmp);
        let effort: f64 = per_arm.iter().sum();
        self.steps += 1;
        let dist = self.min_distance();
        let reward = reward_combine(&[("task", -dist), ("action", effort)], &WEIGHTS)?;
        let success = dist < SUCCESS_RADIUS;
        Ok(Step {
            obs: self.observation(),
            reward,
            terminated: success,
            truncated: !success && self.steps >= self.cfg.horizon,
            success,
        })
    }
}
