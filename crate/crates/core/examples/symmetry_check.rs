//! Builds a three-finger style symmetry spec and checks the group axioms of
//! its transforms.
//!
//! cargo run --example symmetry_check

use symmarl::symmetry::{verify_group_axioms, Block, BlockLayout, GroupKind, SymmetrySpec, TransformSet};

fn build() -> symmarl::Result<SymmetrySpec> {
    let obs = BlockLayout::new(vec![
        Block::invariant("time", 1),
        Block::agent("finger0", 9),
        Block::agent("finger1", 9),
        Block::agent("finger2", 9),
        Block::rotated("object_xy", 2, vec![(0, 1)]),
    ])?;
    let act = BlockLayout::new(vec![Block::agent("torque0", 3), Block::agent("torque1", 3), Block::agent("torque2", 3)])?;
    SymmetrySpec::new(GroupKind::Cyclic(3), obs, act)
}

fn main() -> symmarl::Result<()> {
    let spec = build()?;
    println!("{}", spec.to_json_pretty());
    let set = TransformSet::new(&spec)?;

    let o: Vec<f64> = (0..spec.obs_width()).map(|k| k as f64).collect();
    for i in 0..set.n() {
        let t = set.obs(i).apply(&o)?;
        println!("T_{i}(o): time {:?} finger0 {:?} object {:?}", &t[..1], &t[1..4], &t[28..]);
    }

    let report = verify_group_axioms(&set, 1000, 0);
    println!("{report:#?}");
    println!("within 1e-12: {}", report.within(1e-12));
    Ok(())
}
