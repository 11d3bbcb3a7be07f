use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::transform::{Space, Transform, TransformSet};

/// Maximum absolute residual observed for each group axiom.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct AxiomReport {
    pub commutativity: f64,
    pub distributivity: f64,
    pub cyclicity: f64,
    pub orthogonality: f64,
}

impl AxiomReport {
    pub fn max_residual(&self) -> f64 {
        self.commutativity
            .max(self.distributivity)
            .max(self.cyclicity)
            .max(self.orthogonality)
    }

    pub fn within(&self, tol: f64) -> bool {
        self.max_residual() <= tol
    }

    fn merge(self, other: AxiomReport) -> AxiomReport {
        AxiomReport {
            commutativity: self.commutativity.max(other.commutativity),
            distributivity: self.distributivity.max(other.distributivity),
            cyclicity: self.cyclicity.max(other.cyclicity),
            orthogonality: self.orthogonality.max(other.orthogonality),
        }
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn apply(t: &Transform, v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    t.apply_into(v, &mut out);
    out
}

/// Dense matrix of a transform, column k = T(e_k). Verification only.
pub fn dense_matrix(t: &Transform) -> Vec<Vec<f64>> {
    let w = t.width();
    let mut cols = Vec::with_capacity(w);
    for k in 0..w {
        let mut e = vec![0.0; w];
        e[k] = 1.0;
        cols.push(apply(t, &e));
    }
    (0..w).map(|r| (0..w).map(|c| cols[c][r]).collect()).collect()
}

/// Residual of MᵀM − I for the dense form of `t`.
pub fn orthogonality_residual(t: &Transform) -> f64 {
    let m = dense_matrix(t);
    let w = m.len();
    let mut worst: f64 = 0.0;
    for a in 0..w {
        for b in 0..w {
            let dot: f64 = (0..w).map(|r| m[r][a] * m[r][b]).sum();
            let target = if a == b { 1.0 } else { 0.0 };
            worst = worst.max((dot - target).abs());
        }
    }
    worst
}

/// Checks one family of transforms (which may be hand-built) on random vectors.
pub fn verify_transforms(transforms: &[Transform], sample_count: usize, rng: &mut impl Rng) -> AxiomReport {
    let n = transforms.len();
    let width = transforms.first().map(Transform::width).unwrap_or(0);
    let mut report = AxiomReport::default();
    for t in transforms {
        report.orthogonality = report.orthogonality.max(orthogonality_residual(t));
    }
    for _ in 0..sample_count.max(1) {
        let v: Vec<f64> = (0..width).map(|_| rng.random_range(-1.0..1.0)).collect();
        let images: Vec<Vec<f64>> = transforms.iter().map(|t| apply(t, &v)).collect();
        for i in 0..n {
            // T_i^T T_i v = v and norm preservation
            let mut back = vec![0.0; width];
            transforms[i].apply_transpose_into(&images[i], &mut back);
            report.orthogonality = report.orthogonality.max(max_abs_diff(&back, &v));
            let norm = |x: &[f64]| x.iter().map(|a| a * a).sum::<f64>().sqrt();
            report.orthogonality = report.orthogonality.max((norm(&images[i]) - norm(&v)).abs());

            for j in 0..n {
                let ij = (i + j) % n;
                let ji = apply(&transforms[j], &images[i]);
                let ij_direct = &images[ij];
                let ij_swapped = apply(&transforms[i], &images[j]);
                report.commutativity = report
                    .commutativity
                    .max(max_abs_diff(&ji, ij_direct))
                    .max(max_abs_diff(&ij_swapped, ij_direct));

                for k in 0..n {
                    let sum: Vec<f64> = images[i].iter().zip(&images[k]).map(|(a, b)| a + b).collect();
                    let lhs = apply(&transforms[j], &sum);
                    let tk = apply(&transforms[j], &images[k]);
                    let rhs: Vec<f64> = ji.iter().zip(&tk).map(|(a, b)| a + b).collect();
                    report.distributivity = report.distributivity.max(max_abs_diff(&lhs, &rhs));
                }
            }
        }
        // cyclic: applying T_1 |N| times returns to the start, so T_{i+N} = T_i.
        if n > 0 {
            let generator = &transforms[1 % n];
            let mut x = v.clone();
            for step in 1..=n {
                x = apply(generator, &x);
                let expected = &images[step % n];
                report.cyclicity = report.cyclicity.max(max_abs_diff(&x, expected));
            }
        }
    }
    report
}

/// Group-axiom residuals over both the observation and action transforms.
pub fn verify_group_axioms(set: &TransformSet, sample_count: usize, rng_seed: u64) -> AxiomReport {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    [Space::Observation, Space::Action, Space::CentralAction]
        .into_iter()
        .map(|space| verify_transforms(set.space(space), sample_count, &mut rng))
        .fold(AxiomReport::default(), AxiomReport::merge)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symmetry::layout::{Block, BlockLayout};
    use crate::symmetry::spec::{GroupKind, SymmetrySpec};
    use crate::symmetry::transform::ElementOp;

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

    #[test]
    fn trifinger_layout_satisfies_axioms() {
        let report = verify_group_axioms(&trifinger_like(), 1000, 7);
        assert!(report.within(1e-12), "{report:?}");
    }

    #[test]
    fn reflection_layout_satisfies_axioms() {
        let obs = BlockLayout::new(vec![
            Block::mirrored("core", vec![true, false, true]),
            Block::agent("l", 2),
            Block::agent("r", 2),
        ])
        .unwrap();
        let act = BlockLayout::new(vec![Block::mirrored("f", vec![true]), Block::agent("l", 1), Block::agent("r", 1)])
            .unwrap();
        let set = TransformSet::new(&SymmetrySpec::new(GroupKind::Reflection, obs, act).unwrap()).unwrap();
        let report = verify_group_axioms(&set, 1000, 11);
        assert!(report.within(1e-12), "{report:?}");
    }

    #[test]
    fn corrupted_element_map_is_reported() {
        let set = trifinger_like();
        let mut transforms = set.space(Space::Observation).to_vec();
        let t1 = &transforms[1];
        let mut ops = t1.element_ops().to_vec();
        ops.push(ElementOp::Scale { at: 0, factor: 1.1 });
        transforms[1] = Transform::from_parts(1, 3, Space::Observation, t1.permutation().to_vec(), ops);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let report = verify_transforms(&transforms, 50, &mut rng);
        assert!(report.orthogonality > 0.1, "{report:?}");
    }
}
