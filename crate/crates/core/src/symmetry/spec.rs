use std::path::Path;

use serde::{Deserialize, Serialize};

use super::layout::{BlockLayout, ElementRule};
use crate::error::{Error, Result};

/// Planar rotations are always about the out-of-plane axis.
pub const ROTATION_AXIS: &str = "z";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupKind {
    /// Rotation by multiples of 2π/N. `Cyclic(1)` is the trivial group.
    Cyclic(usize),
    /// Mirror symmetry: two agents (left/right).
    Reflection,
}

impl GroupKind {
    pub fn order(&self) -> usize {
        match self {
            GroupKind::Cyclic(n) => *n,
            GroupKind::Reflection => 2,
        }
    }
}

/// Symmetry group plus the block structure of observations and actions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct SymmetrySpec {
    group: GroupKind,
    obs_layout: BlockLayout,
    act_layout: BlockLayout,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum GroupTag {
    Cyclic,
    Reflection,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    group_kind: GroupTag,
    #[serde(rename = "N", alias = "n")]
    n: usize,
    #[serde(default = "default_axis")]
    rotation_axis: String,
    obs_layout: BlockLayout,
    act_layout: BlockLayout,
}

fn default_axis() -> String {
    ROTATION_AXIS.to_string()
}

impl TryFrom<RawSpec> for SymmetrySpec {
    type Error = Error;

    fn try_from(raw: RawSpec) -> Result<Self> {
        if raw.rotation_axis != ROTATION_AXIS {
            return Err(Error::Spec(format!(
                "rotation_axis must be `{ROTATION_AXIS}`, got `{}`",
                raw.rotation_axis
            )));
        }
        let group = match raw.group_kind {
            GroupTag::Cyclic => GroupKind::Cyclic(raw.n),
            GroupTag::Reflection => {
                if raw.n != 2 {
                    return Err(Error::Spec(format!("reflection requires N = 2, got {}", raw.n)));
                }
                GroupKind::Reflection
            }
        };
        SymmetrySpec::new(group, raw.obs_layout, raw.act_layout)
    }
}

impl From<SymmetrySpec> for RawSpec {
    fn from(spec: SymmetrySpec) -> Self {
        let group_kind = match spec.group {
            GroupKind::Cyclic(_) => GroupTag::Cyclic,
            GroupKind::Reflection => GroupTag::Reflection,
        };
        RawSpec {
            group_kind,
            n: spec.group.order(),
            rotation_axis: default_axis(),
            obs_layout: spec.obs_layout,
            act_layout: spec.act_layout,
        }
    }
}

impl SymmetrySpec {
    pub fn new(group: GroupKind, obs_layout: BlockLayout, act_layout: BlockLayout) -> Result<Self> {
        if group.order() == 0 {
            return Err(Error::Spec("group order must be at least 1".into()));
        }
        for layout in [&obs_layout, &act_layout] {
            layout.agent_groups(group.order())?;
            for block in layout.blocks() {
                check_rule_for_group(group, &block.name, &block.element_rule)?;
            }
        }
        Ok(Self {
            group,
            obs_layout,
            act_layout,
        })
    }

    pub fn from_json_str(json: &str) -> Result<Self> {
        Ok(serde_json::from_str(json)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    pub fn group(&self) -> GroupKind {
        self.group
    }

    /// Number of agents |N|.
    pub fn n_agents(&self) -> usize {
        self.group.order()
    }

    pub fn obs_layout(&self) -> &BlockLayout {
        &self.obs_layout
    }

    pub fn act_layout(&self) -> &BlockLayout {
        &self.act_layout
    }

    pub fn obs_width(&self) -> usize {
        self.obs_layout.total_width()
    }

    pub fn act_width(&self) -> usize {
        self.act_layout.total_width()
    }

    /// Width of the central action A_c (zero when every action belongs to an agent).
    pub fn central_act_width(&self) -> usize {
        self.act_layout.central_indices().len()
    }

    /// Width of one agent's symmetric action A_s,i.
    pub fn agent_act_width(&self) -> usize {
        self.act_layout
            .agent_groups(self.n_agents())
            .expect("validated")
            .iter()
            .map(|g| g.width)
            .sum()
    }

    /// Stable fingerprint used to tell transforms of different specs apart.
    pub(crate) fn fingerprint(&self) -> u64 {
        // FNV-1a over the canonical JSON form.
        let text = serde_json::to_string(self).expect("spec serializes");
        text.bytes()
            .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
    }
}

fn check_rule_for_group(group: GroupKind, block: &str, rule: &ElementRule) -> Result<()> {
    match (group, rule) {
        (GroupKind::Reflection, ElementRule::PlanarRotate(_)) => Err(Error::layout(
            block,
            "planar-rotate is not a reflection; use a sign-flip mask",
        )),
        (GroupKind::Cyclic(n), ElementRule::SignFlip(_)) if n % 2 != 0 => Err(Error::layout(
            block,
            format!("sign-flip is only consistent with cyclic groups of even order, got {n}"),
        )),
        _ => Ok(()),
    }
}
