use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::reward::reward_combine;
use super::{Env, Step};
use crate::error::{Error, Result};
use crate::symmetry::{Block, BlockLayout, GroupKind, SymmetrySpec};

pub const DT: f64 = 0.02;
pub const FALL_ANGLE: f64 = 0.8;
pub const HEAT_DECAY: f64 = 0.95;
const GRAVITY: f64 = 9.8;
const CART_MASS: f64 = 1.0;
const POLE_MASS: f64 = 0.1;
/// Half the pole length.
const HALF_POLE: f64 = 0.5;
const FORCE_MAG: f64 = 10.0;
const THRUST_MAG: f64 = 2.0;
const WEIGHTS: [(&str, f64); 3] = [("alive", 1.0), ("posture", 1.0), ("action", -0.01)];

#[derive(Debug, Clone, PartialEq)]
pub struct ThrusterPoleConfig {
    pub horizon: usize,
}

impl Default for ThrusterPoleConfig {
    fn default() -> Self {
        Self { horizon: 500 }
    }
}

pub fn thrusterpole_spec() -> Result<SymmetrySpec> {
    let obs = BlockLayout::new(vec![
        Block::mirrored("cart", vec![true; 4]),
        Block::agent("heat_left", 1),
        Block::agent("heat_right", 1),
    ])?;
    let act = BlockLayout::new(vec![
        Block::mirrored("force", vec![true]),
        Block::agent("thrust_left", 1),
        Block::agent("thrust_right", 1),
    ])?;
    SymmetrySpec::new(GroupKind::Reflection, obs, act)
}

/// Cart-pole with two tip thrusters pushing the pole left and right.
///
/// State `[x, ẋ, θ, θ̇, h_L, h_R]`; action `[F, a_L, a_R]` with F ∈ [−1, 1]
/// (scaled by the cart force) and thrusts in [0, 1]. The thrusters apply a
/// horizontal force (a_R − a_L) at the pole tip.
#[derive(Debug, Clone)]
pub struct ThrusterPole {
    cfg: ThrusterPoleConfig,
    spec: Arc<SymmetrySpec>,
    state: [f64; 6],
    steps: usize,
}

impl ThrusterPole {
    pub fn new(cfg: ThrusterPoleConfig) -> Result<Self> {
        if cfg.horizon == 0 {
            return Err(Error::config("horizon", "must be at least 1"));
        }
        Ok(Self {
            cfg,
            spec: Arc::new(thrusterpole_spec()?),
            state: [0.0; 6],
            steps: 0,
        })
    }

    pub fn state(&self) -> [f64; 6] {
        self.state
    }

    /// Cart and pole accelerations under cart force `f` and tip force `tip`.
    fn accelerations(&self, f: f64, tip: f64) -> (f64, f64) {
        let [_, _, theta, theta_dot, _, _] = self.state;
        let (sin, cos) = theta.sin_cos();
        let m = POLE_MASS;
        let l = HALF_POLE;
        // generalized forces of the horizontal tip force at x + 2l·sinθ
        let qx = f + tip;
        let qth = tip * 2.0 * l * cos;
        // [(M+m)      m·l·cos ] [ẍ]   [qx + m·l·θ̇²·sin ]
        // [m·l·cos  4/3·m·l²  ] [θ̈] = [qth + m·g·l·sin  ]
        let a11 = CART_MASS + m;
        let a12 = m * l * cos;
        let a22 = 4.0 / 3.0 * m * l * l;
        let b1 = qx + m * l * theta_dot * theta_dot * sin;
        let b2 = qth + m * GRAVITY * l * sin;
        let det = a11 * a22 - a12 * a12;
        let x_acc = (b1 * a22 - a12 * b2) / det;
        let theta_acc = (a11 * b2 - a12 * b1) / det;
        (x_acc, theta_acc)
    }
}

impl Env for ThrusterPole {
    fn spec(&self) -> &Arc<SymmetrySpec> {
        &self.spec
    }

    fn horizon(&self) -> usize {
        self.cfg.horizon
    }

    fn reset(&mut self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        for v in &mut self.state[..4] {
            *v = rng.random_range(-0.05..0.05);
        }
        self.state[4] = 0.0;
        self.state[5] = 0.0;
        self.steps = 0;
        self.observation()
    }

    fn randomize_state(&mut self, rng: &mut ChaCha8Rng) {
        self.state = [
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-0.7..0.7),
            rng.random_range(-1.5..1.5),
            rng.random_range(0.0..3.0),
            rng.random_range(0.0..3.0),
        ];
        self.steps = 0;
    }

    fn observation(&self) -> Vec<f64> {
        self.state.to_vec()
    }

    fn set_from_observation(&mut self, o: &[f64]) -> Result<()> {
        self.spec.obs_layout().check_len(o.len(), "thrusterpole observation")?;
        self.state.copy_from_slice(o);
        self.steps = 0;
        Ok(())
    }

    fn step(&mut self, action: &[f64]) -> Result<Step> {
        self.spec.act_layout().check_len(action.len(), "thrusterpole action")?;
        let f = action[0].clamp(-1.0, 1.0);
        let left = action[1].clamp(0.0, 1.0);
        let right = action[2].clamp(0.0, 1.0);
        let (x_acc, theta_acc) = self.accelerations(f * FORCE_MAG, (right - left) * THRUST_MAG);
        let s = &mut self.state;
        s[0] += DT * s[1];
        s[1] += DT * x_acc;
        s[2] += DT * s[3];
        s[3] += DT * theta_acc;
        s[4] = HEAT_DECAY * s[4] + left;
        s[5] = HEAT_DECAY * s[5] + right;
        self.steps += 1;

        let fallen = self.state[2].abs() > FALL_ANGLE;
        let reward = if fallen {
            -1.0
        } else {
            let [x, _, theta, ..] = self.state;
            let posture = -(0.1 * x * x + 0.5 * theta * theta);
            let effort = f * f + (left * left + right * right);
            reward_combine(&[("alive", 1.0), ("posture", posture), ("action", effort)], &WEIGHTS)?
        };
        Ok(Step {
            obs: self.observation(),
            reward,
            terminated: fallen,
            truncated: !fallen && self.steps >= self.cfg.horizon,
            success: !fallen && self.steps >= self.cfg.horizon,
        })
    }
}
