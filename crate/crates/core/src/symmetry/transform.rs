use std::f64::consts::PI;

use ndarray::{Array2, ArrayView2};

use super::layout::{BlockLayout, ElementRule};
use super::spec::{GroupKind, SymmetrySpec};
use crate::error::{Error, Result};

/// Which vector space a transform acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space {
    Observation,
    Action,
    /// The central part A_c of the action, on its own.
    CentralAction,
}

/// In-place element map applied after the permutation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ElementOp {
    Scale { at: usize, factor: f64 },
    Rotate { at: [usize; 2], cos: f64, sin: f64 },
}

/// One group element T_i, compiled to `out = E (P v)`.
///
/// `P` is an index permutation (`(P v)[k] = v[permutation[k]]`) and `E` is a
/// block-diagonal orthogonal map made of sign flips and 2×2 rotations.
#[derive(Debug, Clone, PartialEq)]
pub struct Transform {
    index: usize,
    order: usize,
    space: Space,
    set_id: u64,
    permutation: Vec<usize>,
    ops: Vec<ElementOp>,
}

impl Transform {
    /// Builds a transform from raw parts. Intended for tests and verification
    /// tooling; transforms normally come from [`TransformSet::new`].
    pub fn from_parts(index: usize, order: usize, space: Space, permutation: Vec<usize>, ops: Vec<ElementOp>) -> Self {
        Self {
            index,
            order,
            space,
            set_id: 0,
            permutation,
            ops,
        }
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn width(&self) -> usize {
        self.permutation.len()
    }

    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    pub fn element_ops(&self) -> &[ElementOp] {
        &self.ops
    }

    pub fn is_identity(&self) -> bool {
        self.ops.is_empty() && self.permutation.iter().enumerate().all(|(k, &p)| k == p)
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.width() {
            return Err(Error::Dimension {
                context: "transform input",
                expected: self.width(),
                got: v.len(),
            });
        }
        let mut out = vec![0.0; v.len()];
        self.apply_into(v, &mut out);
        Ok(out)
    }

    /// Unchecked application; `v` and `out` must have the transform width.
    pub fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        for (o, &src) in out.iter_mut().zip(&self.permutation) {
            *o = v[src];
        }
        for op in &self.ops {
            match *op {
                ElementOp::Scale { at, factor } => out[at] *= factor,
                ElementOp::Rotate { at: [a, b], cos, sin } => {
                    let (x, y) = (out[a], out[b]);
                    out[a] = cos * x - sin * y;
                    out[b] = sin * x + cos * y;
                }
            }
        }
    }

    /// Applies the transpose (the adjoint used when back-propagating through T).
    pub fn apply_transpose_into(&self, g: &[f64], out: &mut [f64]) {
        let mut w = g.to_vec();
        for op in self.ops.iter().rev() {
            match *op {
                ElementOp::Scale { at, factor } => w[at] *= factor,
                ElementOp::Rotate { at: [a, b], cos, sin } => {
                    let (x, y) = (w[a], w[b]);
                    w[a] = cos * x + sin * y;
                    w[b] = -sin * x + cos * y;
                }
            }
        }
        for (k, &src) in self.permutation.iter().enumerate() {
            out[src] = w[k];
        }
    }

    pub fn apply_transpose(&self, g: &[f64]) -> Result<Vec<f64>> {
        if g.len() != self.width() {
            return Err(Error::Dimension {
                context: "transform adjoint input",
                expected: self.width(),
                got: g.len(),
            });
        }
        let mut out = vec![0.0; g.len()];
        self.apply_transpose_into(g, &mut out);
        Ok(out)
    }

    /// Row-wise application to a batch.
    pub fn apply_rows(&self, batch: ArrayView2<f64>) -> Array2<f64> {
        debug_assert_eq!(batch.ncols(), self.width());
        let mut out = Array2::zeros(batch.raw_dim());
        for (row, mut dst) in batch.rows().into_iter().zip(out.rows_mut()) {
            let src = row.to_vec();
            self.apply_into(&src, dst.as_slice_mut().expect("standard layout"));
        }
        out
    }

    /// Row-wise transpose application to a batch.
    pub fn apply_transpose_rows(&self, batch: ArrayView2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros(batch.raw_dim());
        for (row, mut dst) in batch.rows().into_iter().zip(out.rows_mut()) {
            let src = row.to_vec();
            self.apply_transpose_into(&src, dst.as_slice_mut().expect("standard layout"));
        }
        out
    }

    fn compile(layout: &BlockLayout, group: GroupKind, index: usize, space: Space, set_id: u64) -> Result<Self> {
        let n = group.order();
        let mut permutation: Vec<usize> = (0..layout.total_width()).collect();
        for agent_group in layout.agent_groups(n)? {
            // Slot j receives the content of slot (j + i) mod N.
            for (slot, &block) in agent_group.blocks.iter().enumerate() {
                let source = agent_group.blocks[(slot + index) % n];
                let (dst, src) = (layout.offset(block), layout.offset(source));
                for e in 0..agent_group.width {
                    permutation[dst + e] = src + e;
                }
            }
        }

        let mut ops = Vec::new();
        if index != 0 {
            for (b, block) in layout.blocks().iter().enumerate() {
                let off = layout.offset(b);
                match &block.element_rule {
                    ElementRule::Identity => {}
                    ElementRule::SignFlip(mask) => {
                        if index % 2 == 1 {
                            ops.extend(
                                mask.iter()
                                    .enumerate()
                                    .filter(|(_, &flip)| flip)
                                    .map(|(e, _)| ElementOp::Scale { at: off + e, factor: -1.0 }),
                            );
                        }
                    }
                    ElementRule::PlanarRotate(pairs) => {
                        let (cos, sin) = rotation_for(index, n);
                        ops.extend(pairs.iter().map(|&(a, c)| ElementOp::Rotate {
                            at: [off + a, off + c],
                            cos,
                            sin,
                        }));
                    }
                    ElementRule::Quaternion => {
                        return Err(Error::layout(&block.name, "quaternion blocks are not supported"));
                    }
                }
            }
        }
        Ok(Self {
            index,
            order: n,
            space,
            set_id,
            permutation,
            ops,
        })
    }
}

/// cos/sin of θ_i = −2π·i/N, exact at quarter turns.
pub fn rotation_for(index: usize, n: usize) -> (f64, f64) {
    let k = index % n;
    if (4 * k).is_multiple_of(n) {
        return match (4 * k) / n {
            0 => (1.0, 0.0),
            1 => (0.0, -1.0),
            2 => (-1.0, 0.0),
            _ => (0.0, 1.0),
        };
    }
    let theta = -2.0 * PI * k as f64 / n as f64;
    (theta.cos(), theta.sin())
}

/// The |N| observation and action transforms of one symmetry spec.
#[derive(Debug, Clone)]
pub struct TransformSet {
    spec: SymmetrySpec,
    id: u64,
    obs: Vec<Transform>,
    act: Vec<Transform>,
    central_act: Vec<Transform>,
}

impl TransformSet {
    pub fn new(spec: &SymmetrySpec) -> Result<Self> {
        let id = spec.fingerprint();
        let group = spec.group();
        let n = spec.n_agents();
        let central = spec.act_layout().central_layout()?;
        let build = |layout: &BlockLayout, space| {
            (0..n)
                .map(|i| Transform::compile(layout, group, i, space, id))
                .collect::<Result<Vec<_>>>()
        };
        Ok(Self {
            spec: spec.clone(),
            id,
            obs: build(spec.obs_layout(), Space::Observation)?,
            act: build(spec.act_layout(), Space::Action)?,
            central_act: build(&central, Space::CentralAction)?,
        })
    }

    pub fn spec(&self) -> &SymmetrySpec {
        &self.spec
    }

    pub fn n(&self) -> usize {
        self.obs.len()
    }

    /// T_i on observations; the index is reduced modulo |N|.
    pub fn obs(&self, i: usize) -> &Transform {
        &self.obs[i % self.n()]
    }

    pub fn act(&self, i: usize) -> &Transform {
        &self.act[i % self.n()]
    }

    pub fn central_act(&self, i: usize) -> &Transform {
        &self.central_act[i % self.n()]
    }

    pub fn space(&self, space: Space) -> &[Transform] {
        match space {
            Space::Observation => &self.obs,
            Space::Action => &self.act,
            Space::CentralAction => &self.central_act,
        }
    }

    fn check_member(&self, t: &Transform) -> Result<()> {
        if t.set_id != self.id || t.order != self.n() {
            return Err(Error::SpecMismatch);
        }
        Ok(())
    }

    /// T_j ∘ T_i = T_{(i+j) mod N}.
    pub fn compose(&self, t_i: &Transform, t_j: &Transform) -> Result<&Transform> {
        self.check_member(t_i)?;
        self.check_member(t_j)?;
        if t_i.space != t_j.space {
            return Err(Error::SpecMismatch);
        }
        Ok(&self.space(t_i.space)[(t_i.index + t_j.index) % self.n()])
    }

    /// T_i⁻¹ = T_{(N−i) mod N}.
    pub fn inverse(&self, t: &Transform) -> Result<&Transform> {
        self.check_member(t)?;
        Ok(&self.space(t.space)[(self.n() - t.index) % self.n()])
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;

    use super::*;
    use crate::symmetry::layout::Block;

    fn trifinger_like() -> TransformSet {
        let obs = BlockLayout::new(vec![
            Block::invariant("t_delay", 1),
            Block::agent("alpha0", 9),
            Block::agent("alpha1", 9),
            Block::agent("alpha2", 9),
            Block::rotated("p_object", 2, vec![(0, 1)]),
        ])
        .unwrap();
        let act = BlockLayout::new(vec![Block::agent("u0", 3), Block::agent("u1", 3), Block::agent("u2", 3)]).unwrap();
        TransformSet::new(&SymmetrySpec::new(GroupKind::Cyclic(3), obs, act).unwrap()).unwrap()
    }

    fn cyclic(n: usize) -> TransformSet {
        let mut blocks = vec![Block::invariant("t", 1)];
        blocks.extend((0..n).map(|k| Block::agent(format!("a{k}"), 2)));
        blocks.push(Block::rotated("p", 2, vec![(0, 1)]));
        let obs = BlockLayout::new(blocks).unwrap();
        let act = BlockLayout::new((0..n).map(|k| Block::agent(format!("u{k}"), 1)).collect()).unwrap();
        TransformSet::new(&SymmetrySpec::new(GroupKind::Cyclic(n), obs, act).unwrap()).unwrap()
    }

    fn mirror() -> TransformSet {
        let obs = BlockLayout::new(vec![
            Block::mirrored("pos", vec![false, true]),
            Block::agent("l", 1),
            Block::agent("r", 1),
        ])
        .unwrap();
        let act = BlockLayout::new(vec![Block::mirrored("f", vec![true]), Block::agent("l", 1), Block::agent("r", 1)])
            .unwrap();
        TransformSet::new(&SymmetrySpec::new(GroupKind::Reflection, obs, act).unwrap()).unwrap()
    }

    #[test]
    fn t1_shifts_fingers_and_rotates_object() {
        let set = trifinger_like();
        let mut o = vec![0.5];
        for finger in 0..3 {
            o.extend((0..9).map(|e| (10 * (finger + 1) + e) as f64));
        }
        o.extend([1.0, 0.0]);
        let t1 = set.obs(1).apply(&o).unwrap();
        assert_eq!(t1[0], 0.5);
        assert_eq!(&t1[1..10], &o[10..19]);
        assert_eq!(&t1[10..19], &o[19..28]);
        assert_eq!(&t1[19..28], &o[1..10]);
        assert_abs_diff_eq!(t1[28], -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(t1[29], -0.866_025_403_784_438_6, epsilon = 1e-15);
    }

    #[test]
    fn identity_element_is_exact() {
        for set in [trifinger_like(), cyclic(4), mirror()] {
            assert!(set.obs(0).is_identity());
            assert!(set.act(0).is_identity());
            let v: Vec<f64> = (0..set.obs(0).width()).map(|k| (k as f64).sin()).collect();
            assert_eq!(set.obs(0).apply(&v).unwrap(), v);
        }
    }

    #[test]
    fn reflection_flips_marked_component() {
        let set = mirror();
        let out = set.obs(1).apply(&[0.3, 0.7, 1.0, 2.0]).unwrap();
        assert_eq!(out, vec![0.3, -0.7, 2.0, 1.0]);
    }

    #[test]
    fn invariant_block_untouched() {
        let set = cyclic(3);
        for i in 0..3 {
            let mut v = vec![0.0; set.obs(0).width()];
            v[0] = 7.0;
            assert_eq!(set.obs(i).apply(&v).unwrap()[0], 7.0);
        }
    }

    #[test]
    fn length_mismatch_is_dimension_error() {
        let set = cyclic(3);
        assert!(matches!(set.obs(1).apply(&[1.0, 2.0]), Err(Error::Dimension { .. })));
    }

    #[test]
    fn compose_follows_index_addition() {
        let c3 = cyclic(3);
        assert_eq!(c3.compose(c3.obs(1), c3.obs(2)).unwrap().index(), 0);
        let c4 = cyclic(4);
        assert_eq!(c4.compose(c4.obs(1), c4.obs(1)).unwrap().index(), 2);
        let m = mirror();
        assert_eq!(m.compose(m.act(1), m.act(1)).unwrap().index(), 0);
    }

    #[test]
    fn inverse_indices() {
        let c3 = cyclic(3);
        assert_eq!(c3.inverse(c3.obs(1)).unwrap().index(), 2);
        let m = mirror();
        assert_eq!(m.inverse(m.obs(1)).unwrap().index(), 1);
        let c5 = cyclic(5);
        assert_eq!(c5.inverse(c5.obs(2)).unwrap().index(), 3);
    }

    #[test]
    fn compose_rejects_foreign_transform() {
        let a = cyclic(3);
        let b = trifinger_like();
        assert!(matches!(a.compose(a.obs(1), b.obs(1)), Err(Error::SpecMismatch)));
        assert!(matches!(a.inverse(b.obs(2)), Err(Error::SpecMismatch)));
        assert!(matches!(a.compose(a.obs(1), a.act(1)), Err(Error::SpecMismatch)));
    }

    #[test]
    fn index_is_reduced_modulo_order() {
        let set = cyclic(3);
        assert_eq!(set.obs(4), set.obs(1));
    }

    #[test]
    fn quarter_turns_are_exact() {
        let set = cyclic(4);
        let w = set.obs(0).width();
        let mut v = vec![0.0; w];
        v[w - 2] = 1.0;
        let out = set.obs(1).apply(&v).unwrap();
        assert_eq!(&out[w - 2..], &[0.0, -1.0]);
    }

    #[test]
    fn transpose_is_inverse() {
        let set = trifinger_like();
        let v: Vec<f64> = (0..30).map(|k| (k as f64 * 0.37).cos()).collect();
        for i in 0..3 {
            let t = set.obs(i);
            let back = t.apply_transpose(&t.apply(&v).unwrap()).unwrap();
            for (a, b) in back.iter().zip(&v) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn sentinel_blocks_move_to_shifted_slot() {
        for n in [2, 3, 4, 5] {
            let set = cyclic(n);
            let mut v = vec![0.0; set.obs(0).width()];
            for j in 0..n {
                v[1 + 2 * j] = 100.0 + j as f64;
                v[2 + 2 * j] = -(100.0 + j as f64);
            }
            for i in 0..n {
                let out = set.obs(i).apply(&v).unwrap();
                for j in 0..n {
                    let slot = (j + n - i) % n;
                    assert_eq!(out[1 + 2 * slot], 100.0 + j as f64);
                    assert_eq!(out[2 + 2 * slot], -(100.0 + j as f64));
                }
            }
        }
    }
}
