//! Symmetry groups over block-structured flat vectors.
//!
//! A [`SymmetrySpec`] names a group (cyclic or reflection) and the block
//! decomposition of observations and actions. [`TransformSet`] compiles it
//! into |N| exact orthogonal maps T_0..T_{N-1} with T_0 the identity.

mod demo;
mod layout;
mod spec;
mod transform;
mod verify;

pub use demo::demo_spec;
pub use layout::{AgentGroup, Block, BlockKind, BlockLayout, ElementRule};
pub use spec::{GroupKind, SymmetrySpec, ROTATION_AXIS};
pub use transform::{rotation_for, ElementOp, Space, Transform, TransformSet};
pub use verify::{dense_matrix, orthogonality_residual, verify_group_axioms, verify_transforms, AxiomReport};

use crate::error::Result;

/// Compiles the transform set of a spec.
pub fn build_transform_set(spec: &SymmetrySpec) -> Result<TransformSet> {
    TransformSet::new(spec)
}
