use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use ndarray::{Array1, ArrayView2};
use serde::{Deserialize, Serialize};

use super::normalizer::{ObsNormalizer, RunningMeanStd};
use crate::error::{Error, Result};
use crate::masa::{Critic, CriticMode, Policy, Structure};
use crate::net::{Activation, Checkpoint, Record};
use crate::seeding::{derive_seed, streams};
use crate::symmetry::{SymmetrySpec, TransformSet};

/// The four compared methods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Variant {
    /// One network over the whole robot.
    Sa,
    /// SA plus auxiliary symmetry losses.
    Sasa,
    /// Shared per-agent network with a one-hot agent id, no transforms.
    Ma,
    /// Shared per-agent network on transformed views.
    Masa,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Sa, Variant::Sasa, Variant::Ma, Variant::Masa];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Sa => "SA",
            Variant::Sasa => "SASA",
            Variant::Ma => "MA",
            Variant::Masa => "MASA",
        }
    }

    pub fn structure(self, set: &Arc<TransformSet>) -> Structure {
        match self {
            Variant::Sa | Variant::Sasa => Structure::Monolithic,
            Variant::Ma => Structure::OneHot(set.n()),
            Variant::Masa => Structure::Symmetric(set.clone()),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "SA" => Ok(Variant::Sa),
            "SASA" => Ok(Variant::Sasa),
            "MA" => Ok(Variant::Ma),
            "MASA" => Ok(Variant::Masa),
            _ => Err(Error::UnknownVariant(s.to_string())),
        }
    }
}

impl TryFrom<String> for Variant {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Variant> for String {
    fn from(v: Variant) -> String {
        v.name().to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetConfig {
    pub policy_hidden: Vec<usize>,
    pub critic_hidden: Vec<usize>,
    pub activation: Activation,
    /// Initial value of every policy log standard deviation.
    pub init_log_std: f64,
}

impl Default for NetConfig {
    fn default() -> Self {
        Self {
            policy_hidden: vec![128, 64],
            critic_hidden: vec![128, 64],
            activation: Activation::Elu,
            init_log_std: 0.0,
        }
    }
}

/// Policy, critic and normalizers of one variant.
#[derive(Debug, Clone)]
pub struct Agent {
    pub variant: Variant,
    pub set: Arc<TransformSet>,
    pub policy: Policy,
    pub critic: Critic,
    pub obs_norm: ObsNormalizer,
    pub value_norm: RunningMeanStd,
    pub normalize_value: bool,
}

impl Agent {
    pub fn new(variant: Variant, spec: &SymmetrySpec, nets: &NetConfig, normalize_input: bool, normalize_value: bool, seed: u64) -> Result<Self> {
        let set = Arc::new(TransformSet::new(spec)?);
        let structure = variant.structure(&set);
        let mut policy = Policy::new(structure.clone(), spec, &nets.policy_hidden, nets.activation, derive_seed(seed, streams::POLICY_INIT))?;
        let critic = Critic::new(
            structure,
            CriticMode::V,
            spec.obs_width(),
            spec.act_width(),
            &nets.critic_hidden,
            nets.activation,
            derive_seed(seed, streams::CRITIC_INIT),
        )?;
        policy.log_std.fill(nets.init_log_std);
        let pool = (variant == Variant::Masa).then(|| set.clone());
        Ok(Self {
            variant,
            obs_norm: ObsNormalizer::new(spec.obs_width(), normalize_input, pool),
            value_norm: RunningMeanStd::new(1),
            normalize_value,
            set,
            policy,
            critic,
        })
    }

    pub fn spec(&self) -> &SymmetrySpec {
        self.set.spec()
    }

    /// Critic values in return units for normalized observations.
    pub fn values(&self, norm_obs: ArrayView2<f64>) -> Result<Array1<f64>> {
        let (v, _) = self.critic.value(norm_obs)?;
        Ok(if self.normalize_value {
            v.mapv(|x| self.value_norm.denormalize_scalar(x))
        } else {
            v
        })
    }

    /// Deterministic action for one raw observation.
    pub fn act_mean(&self, raw_obs: &[f64]) -> Result<Vec<f64>> {
        let view = ArrayView2::from_shape((1, raw_obs.len()), raw_obs).map_err(|_| Error::Dimension {
            context: "agent observation",
            expected: self.spec().obs_width(),
            got: raw_obs.len(),
        })?;
        let norm = self.obs_norm.normalize(view);
        Ok(self.policy.mean(norm.view())?.0.row(0).to_vec())
    }

    /// Policy on raw observations (normalizer folded in), for symmetry checks.
    pub fn raw_policy_view(&self) -> RawPolicy<'_> {
        RawPolicy(self)
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut ck = Checkpoint::new();
        ck.push("variant", Record::Text(self.variant.name().into()))
            .push("policy.phi", Record::Net(self.policy.phi.clone()))
            .push("policy.log_std", Record::Vector(self.policy.log_std.clone()))
            .push("critic.psi", Record::Net(self.critic.psi.clone()))
            .push("critic.theta", Record::Net(self.critic.theta.clone()))
            .push("obs_norm.enabled", Record::Vector(vec![f64::from(u8::from(self.obs_norm.enabled))]))
            .push("obs_norm.mean", Record::Vector(self.obs_norm.stats.mean.clone()))
            .push("obs_norm.var", Record::Vector(self.obs_norm.stats.var.clone()))
            .push("obs_norm.count", Record::Vector(vec![self.obs_norm.stats.count]))
            .push("value_norm.enabled", Record::Vector(vec![f64::from(u8::from(self.normalize_value))]))
            .push("value_norm.mean", Record::Vector(self.value_norm.mean.clone()))
            .push("value_norm.var", Record::Vector(self.value_norm.var.clone()))
            .push("value_norm.count", Record::Vector(vec![self.value_norm.count]));
        ck
    }

    pub fn from_checkpoint(ck: &Checkpoint, spec: &SymmetrySpec) -> Result<Self> {
        let variant: Variant = ck.text("variant")?.parse()?;
        let set = Arc::new(TransformSet::new(spec)?);
        let structure = variant.structure(&set);
        let policy = Policy::from_parts(structure.clone(), spec, ck.net("policy.phi")?.clone(), ck.vector("policy.log_std")?.to_vec())?;
        let critic = Critic::from_parts(
            structure,
            CriticMode::V,
            spec.obs_width(),
            spec.act_width(),
            ck.net("critic.psi")?.clone(),
            ck.net("critic.theta")?.clone(),
        )?;
        let pool = (variant == Variant::Masa).then(|| set.clone());
        let mut obs_norm = ObsNormalizer::new(spec.obs_width(), ck.vector("obs_norm.enabled")?[0] != 0.0, pool);
        obs_norm.stats = RunningMeanStd {
            mean: ck.vector("obs_norm.mean")?.to_vec(),
            var: ck.vector("obs_norm.var")?.to_vec(),
            count: ck.vector("obs_norm.count")?[0],
        };
        if obs_norm.stats.width() != spec.obs_width() || obs_norm.stats.var.len() != spec.obs_width() {
            return Err(Error::Dimension {
                context: "checkpoint observation statistics",
                expected: spec.obs_width(),
                got: obs_norm.stats.width(),
            });
        }
        Ok(Self {
            variant,
            policy,
            critic,
            obs_norm,
            value_norm: RunningMeanStd {
                mean: ck.vector("value_norm.mean")?.to_vec(),
                var: ck.vector("value_norm.var")?.to_vec(),
                count: ck.vector("value_norm.count")?[0],
            },
            normalize_value: ck.vector("value_norm.enabled")?[0] != 0.0,
            set,
        })
    }
}

/// An [`Agent`]'s policy and critic as functions of raw observations.
pub struct RawPolicy<'a>(&'a Agent);

impl RawPolicy<'_> {
    pub fn mean(&self, raw: &[f64]) -> Result<Vec<f64>> {
        self.0.act_mean(raw)
    }

    pub fn value(&self, raw: &[f64]) -> Result<f64> {
        let view = ArrayView2::from_shape((1, raw.len()), raw).map_err(|_| Error::Dimension {
            context: "agent observation",
            expected: self.0.spec().obs_width(),
            got: raw.len(),
        })?;
        Ok(self.0.values(self.0.obs_norm.normalize(view).view())?[0])
    }

    pub fn log_prob(&self, raw: &[f64], action: &[f64]) -> Result<f64> {
        let view = ArrayView2::from_shape((1, raw.len()), raw).map_err(|_| Error::Dimension {
            context: "agent observation",
            expected: self.0.spec().obs_width(),
            got: raw.len(),
        })?;
        let norm = self.0.obs_norm.normalize(view);
        self.0.policy.log_prob(norm.row(0).as_slice().expect("row"), action)
    }
}
