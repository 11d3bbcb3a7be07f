use rand::Rng;

use super::{ActionMap, Critic, CriticMode, JointAction, Policy};
use crate::error::Result;
use crate::symmetry::TransformSet;

/// Largest violations of the equivariance relations over a set of probes.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EquivarianceReport {
    /// max |A_s,j(T_i(o)) − A_s,i(T_j(o))|
    pub agent: f64,
    /// max |A_c(T_i(o)) − T_i(A_c(o))|
    pub central: f64,
    /// max |log p(a|o) − log p(T_i(a)|T_i(o))|
    pub log_density: f64,
}

impl EquivarianceReport {
    pub fn max(&self) -> f64 {
        self.agent.max(self.central).max(self.log_density)
    }

    pub fn merge(self, other: Self) -> Self {
        Self {
            agent: self.agent.max(other.agent),
            central: self.central.max(other.central),
            log_density: self.log_density.max(other.log_density),
        }
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Evaluates the equivariance relations of any policy against `set`.
///
/// The agent/central split comes from the spec, so monolithic policies can be
/// checked too (and generally fail).
pub fn policy_residuals(policy: &Policy, set: &TransformSet, observations: &[Vec<f64>], rng: &mut impl Rng) -> Result<EquivarianceReport> {
    let n = set.n();
    let map = ActionMap::from_spec(set.spec(), n)?;
    let mut report = EquivarianceReport::default();
    for o in observations {
        let views: Vec<Vec<f64>> = (0..n).map(|i| set.obs(i).apply(o)).collect::<Result<_>>()?;
        let means: Vec<JointAction> = views
            .iter()
            .map(|v| Ok(JointAction::from_flat(&map, policy.joint_mean(v)?.flat)))
            .collect::<Result<_>>()?;
        for i in 0..n {
            for j in 0..n {
                report.agent = report.agent.max(max_abs_diff(&means[i].agents[j], &means[j].agents[i]));
            }
            if !means[0].central.is_empty() {
                let expected = set.central_act(i).apply(&means[0].central)?;
                report.central = report.central.max(max_abs_diff(&means[i].central, &expected));
            }
            let (a, lp) = policy.sample(o, rng)?;
            let lp_t = policy.log_prob(&views[i], &set.act(i).apply(&a.flat)?)?;
            report.log_density = report.log_density.max((lp - lp_t).abs());
        }
    }
    Ok(report)
}

/// max |V(T_i(o)) − V(o)| (or Q with paired transformed actions).
pub fn critic_residual(critic: &Critic, set: &TransformSet, observations: &[Vec<f64>], actions: Option<&[Vec<f64>]>) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (k, o) in observations.iter().enumerate() {
        let value = |i: usize| -> Result<f64> {
            let ot = set.obs(i).apply(o)?;
            match (critic.mode(), actions) {
                (CriticMode::Q, Some(acts)) => critic.q_one(&ot, &set.act(i).apply(&acts[k])?),
                _ => critic.value_one(&ot),
            }
        };
        let base = value(0)?;
        for i in 1..set.n() {
            worst = worst.max((value(i)? - base).abs());
        }
    }
    Ok(worst)
}
