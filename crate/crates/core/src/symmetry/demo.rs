use super::{Block, BlockLayout, GroupKind, SymmetrySpec};
use crate::error::Result;

/// A small spec exercising every block kind, for tests and examples.
///
/// obs: `[t | q_0..q_{N-1} (3 each) | p (2, variant) | h_0..h_{N-1} (1 each)]`
/// act: `[c (2, variant) | u_0..u_{N-1} (2 each)]`
///
/// Variant blocks rotate in the plane for cyclic groups and flip their
/// second component for reflection.
pub fn demo_spec(group: GroupKind) -> Result<SymmetrySpec> {
    let n = group.order();
    let variant = |name: &str| match group {
        GroupKind::Cyclic(_) => Block::rotated(name, 2, vec![(0, 1)]),
        GroupKind::Reflection => Block::mirrored(name, vec![false, true]),
    };
    let mut obs = vec![Block::invariant("t", 1)];
    obs.extend((0..n).map(|j| Block::agent(format!("q{j}"), 3)));
    obs.push(variant("p"));
    obs.extend((0..n).map(|j| Block::agent(format!("h{j}"), 1)));
    let mut act = vec![variant("c")];
    act.extend((0..n).map(|j| Block::agent(format!("u{j}"), 2)));
    SymmetrySpec::new(group, BlockLayout::new(obs)?, BlockLayout::new(act)?)
}
