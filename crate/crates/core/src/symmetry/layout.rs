use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How a block behaves under the symmetry group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlockKind {
    /// Unchanged by every transform (control delay, time, ...).
    ScalarInvariant,
    /// Stays in place but its elements are rotated or reflected.
    CentralVariant,
    /// One block per agent; transforms circularly shift these between agent slots.
    AgentIndexed,
}

/// Per-element action of a transform on a block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ElementRule {
    Identity,
    /// `true` marks a component that changes sign under the mirror.
    SignFlip(Vec<bool>),
    /// Index pairs (within the block) forming planar vectors rotated about the symmetry axis.
    PlanarRotate(Vec<(usize, usize)>),
    /// Accepted by the parser only so it can be rejected with a clear error.
    Quaternion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Block {
    pub name: String,
    pub width: usize,
    pub kind: BlockKind,
    #[serde(default = "identity_rule")]
    pub element_rule: ElementRule,
}

fn identity_rule() -> ElementRule {
    ElementRule::Identity
}

impl Block {
    pub fn new(name: impl Into<String>, width: usize, kind: BlockKind, element_rule: ElementRule) -> Self {
        Self {
            name: name.into(),
            width,
            kind,
            element_rule,
        }
    }

    pub fn invariant(name: impl Into<String>, width: usize) -> Self {
        Self::new(name, width, BlockKind::ScalarInvariant, ElementRule::Identity)
    }

    pub fn agent(name: impl Into<String>, width: usize) -> Self {
        Self::new(name, width, BlockKind::AgentIndexed, ElementRule::Identity)
    }

    pub fn rotated(name: impl Into<String>, width: usize, pairs: Vec<(usize, usize)>) -> Self {
        Self::new(name, width, BlockKind::CentralVariant, ElementRule::PlanarRotate(pairs))
    }

    pub fn mirrored(name: impl Into<String>, mask: Vec<bool>) -> Self {
        let width = mask.len();
        Self::new(name, width, BlockKind::CentralVariant, ElementRule::SignFlip(mask))
    }

    fn validate(&self) -> Result<()> {
        if self.width == 0 {
            return Err(Error::layout(&self.name, "width must be positive"));
        }
        match &self.element_rule {
            ElementRule::Identity => {}
            ElementRule::SignFlip(mask) => {
                if mask.len() != self.width {
                    return Err(Error::layout(
                        &self.name,
                        format!("sign-flip mask has {} entries for width {}", mask.len(), self.width),
                    ));
                }
            }
            ElementRule::PlanarRotate(pairs) => {
                let mut used = vec![false; self.width];
                for &(a, b) in pairs {
                    if a >= self.width || b >= self.width {
                        return Err(Error::layout(
                            &self.name,
                            format!("rotate pair ({a}, {b}) out of range for width {}", self.width),
                        ));
                    }
                    if a == b || used[a] || used[b] {
                        return Err(Error::layout(&self.name, format!("rotate pair ({a}, {b}) overlaps another pair")));
                    }
                    used[a] = true;
                    used[b] = true;
                }
            }
            ElementRule::Quaternion => {
                return Err(Error::layout(&self.name, "quaternion blocks are not supported"));
            }
        }
        if self.kind == BlockKind::ScalarInvariant && self.element_rule != ElementRule::Identity {
            return Err(Error::layout(&self.name, "scalar-invariant blocks must use the identity rule"));
        }
        Ok(())
    }
}

/// The N blocks that hold one logical per-agent quantity, in agent order.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentGroup {
    pub blocks: Vec<usize>,
    pub width: usize,
}

/// Named segmentation of a flat observation or action vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLayout", into = "RawLayout")]
pub struct BlockLayout {
    blocks: Vec<Block>,
    offsets: Vec<usize>,
    total_width: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLayout {
    blocks: Vec<Block>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    total_width: Option<usize>,
}

impl TryFrom<RawLayout> for BlockLayout {
    type Error = Error;

    fn try_from(raw: RawLayout) -> Result<Self> {
        let layout = BlockLayout::new(raw.blocks)?;
        if let Some(declared) = raw.total_width {
            if declared != layout.total_width {
                return Err(Error::layout(
                    "<layout>",
                    format!("declared total_width {declared} but blocks sum to {}", layout.total_width),
                ));
            }
        }
        Ok(layout)
    }
}

impl From<BlockLayout> for RawLayout {
    fn from(layout: BlockLayout) -> Self {
        RawLayout {
            total_width: Some(layout.total_width),
            blocks: layout.blocks,
        }
    }
}

impl BlockLayout {
    pub fn new(blocks: Vec<Block>) -> Result<Self> {
        let mut offsets = Vec::with_capacity(blocks.len());
        let mut total_width = 0;
        for block in &blocks {
            block.validate()?;
            offsets.push(total_width);
            total_width += block.width;
        }
        Ok(Self {
            blocks,
            offsets,
            total_width,
        })
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn offset(&self, block: usize) -> usize {
        self.offsets[block]
    }

    pub fn total_width(&self) -> usize {
        self.total_width
    }

    /// Splits agent-indexed blocks into groups of `n` consecutive members.
    ///
    /// Agent-indexed blocks are assigned in order: the first `n` form one
    /// quantity (agent 0..n), the next `n` the following quantity, and so on.
    pub fn agent_groups(&self, n: usize) -> Result<Vec<AgentGroup>> {
        let agent_blocks: Vec<usize> = self
            .blocks
            .iter()
            .enumerate()
            .filter(|(_, b)| b.kind == BlockKind::AgentIndexed)
            .map(|(i, _)| i)
            .collect();
        if !agent_blocks.len().is_multiple_of(n) {
            let last = agent_blocks.last().map(|&i| self.blocks[i].name.clone()).unwrap_or_default();
            return Err(Error::layout(
                last,
                format!("{} agent-indexed blocks cannot be split into groups of {n}", agent_blocks.len()),
            ));
        }
        let mut groups = Vec::new();
        for chunk in agent_blocks.chunks(n) {
            let first = &self.blocks[chunk[0]];
            for &member in &chunk[1..] {
                let block = &self.blocks[member];
                if block.width != first.width {
                    return Err(Error::layout(
                        &block.name,
                        format!("agent group width {} differs from `{}` ({})", block.width, first.name, first.width),
                    ));
                }
                if block.element_rule != first.element_rule {
                    return Err(Error::layout(&block.name, format!("element rule differs from `{}`", first.name)));
                }
            }
            groups.push(AgentGroup {
                blocks: chunk.to_vec(),
                width: first.width,
            });
        }
        Ok(groups)
    }

    /// Flat indices covered by non-agent blocks, in layout order.
    pub fn central_indices(&self) -> Vec<usize> {
        self.blocks
            .iter()
            .enumerate()
            .filter(|(_, b)| b.kind != BlockKind::AgentIndexed)
            .flat_map(|(i, b)| self.offsets[i]..self.offsets[i] + b.width)
            .collect()
    }

    /// Layout made of the non-agent blocks only.
    pub fn central_layout(&self) -> Result<BlockLayout> {
        BlockLayout::new(
            self.blocks
                .iter()
                .filter(|b| b.kind != BlockKind::AgentIndexed)
                .cloned()
                .collect(),
        )
    }

    pub fn check_len(&self, len: usize, context: &'static str) -> Result<()> {
        if len != self.total_width {
            return Err(Error::Dimension {
                context,
                expected: self.total_width,
                got: len,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn widths_sum_to_total() {
        let layout = BlockLayout::new(vec![
            Block::invariant("t", 1),
            Block::agent("a0", 3),
            Block::agent("a1", 3),
            Block::rotated("p", 2, vec![(0, 1)]),
        ])
        .unwrap();
        assert_eq!(layout.total_width(), 9);
        assert_eq!(layout.offset(3), 7);
        assert_eq!(layout.central_indices(), vec![0, 7, 8]);
    }

    #[test]
    fn overlapping_rotate_pairs_rejected() {
        let err = BlockLayout::new(vec![Block::rotated("p", 3, vec![(0, 1), (1, 2)])]).unwrap_err();
        assert!(err.to_string().contains("`p`"), "{err}");
    }

    #[test]
    fn out_of_range_pair_rejected() {
        assert!(BlockLayout::new(vec![Block::rotated("p", 2, vec![(0, 2)])]).is_err());
    }

    #[test]
    fn declared_total_width_must_match() {
        let json = r#"{"blocks":[{"name":"x","width":2,"kind":"scalar-invariant"}],"total_width":3}"#;
        let err = serde_json::from_str::<BlockLayout>(json).unwrap_err();
        assert!(err.to_string().contains("total_width"), "{err}");
    }

    #[test]
    fn quaternion_block_is_a_construction_error() {
        let json = r#"{"blocks":[{"name":"orient","width":4,"kind":"central-variant","element_rule":"quaternion"}]}"#;
        let err = serde_json::from_str::<BlockLayout>(json).unwrap_err();
        assert!(err.to_string().contains("quaternion"), "{err}");
    }

    #[test]
    fn agent_group_cardinality_checked() {
        let layout = BlockLayout::new(vec![Block::agent("a0", 2), Block::agent("a1", 2)]).unwrap();
        let err = layout.agent_groups(3).unwrap_err();
        assert!(err.to_string().contains("`a1`"), "{err}");
        assert_eq!(layout.agent_groups(2).unwrap().len(), 1);
        assert_eq!(layout.agent_groups(1).unwrap().len(), 2);
    }

    #[test]
    fn agent_group_width_mismatch_names_block() {
        let layout = BlockLayout::new(vec![Block::agent("a0", 2), Block::agent("a1", 3)]).unwrap();
        let err = layout.agent_groups(2).unwrap_err();
        assert!(err.to_string().contains("`a1`"), "{err}");
    }
}
