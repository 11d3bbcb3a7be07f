use super::dataset::{Dataset, Transition};
use crate::error::Result;
use crate::symmetry::TransformSet;

/// Adds the symmetric copy (T_i(o), T_i(a), r, T_i(o′)) of every transition
/// for each non-identity transform.
///
/// Transformed copies follow the originals in transform order; episode ids are
/// offset by `i × (max id + 1)` so each copy is a distinct episode.
pub fn augment_symmetric(ds: &Dataset) -> Result<Dataset> {
    let set = TransformSet::new(ds.spec())?;
    let stride = ds.transitions.iter().map(|t| t.episode).max().map_or(0, |m| m + 1);
    let mut out = Vec::with_capacity(ds.len() * set.n());
    out.extend(ds.transitions.iter().cloned());
    for i in 1..set.n() {
        let (obs_t, act_t) = (set.obs(i), set.act(i));
        for t in &ds.transitions {
            out.push(Transition {
                obs: obs_t.apply(&t.obs)?,
                action: act_t.apply(&t.action)?,
                reward: t.reward,
                next_obs: obs_t.apply(&t.next_obs)?,
                done: t.done,
                terminal: t.terminal,
                episode: t.episode + i as u64 * stride,
            });
        }
    }
    let mut meta = ds.meta.clone();
    meta.generator = format!("{}+augmented", meta.generator);
    meta.episodes *= set.n() as u64;
    Dataset::new(meta, out)
}
