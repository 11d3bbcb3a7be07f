use std::sync::Arc;

use ndarray::{s, Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::symmetry::{Block, BlockKind, ElementRule, SymmetrySpec, TransformSet};

/// How one shared network is replicated over agents.
#[derive(Debug, Clone)]
pub enum Structure {
    /// Agent j sees T_j(o); central outputs are mapped back through T_{N−1−j}.
    Symmetric(Arc<TransformSet>),
    /// Agent j sees the untransformed o with a one-hot id appended.
    OneHot(usize),
    /// One network over the whole robot.
    Monolithic,
}

impl Structure {
    pub fn branches(&self) -> usize {
        match self {
            Structure::Symmetric(set) => set.n(),
            Structure::OneHot(n) => *n,
            Structure::Monolithic => 1,
        }
    }

    /// Width of one branch's network input given the robot observation width.
    pub fn branch_input_width(&self, obs_width: usize) -> usize {
        match self {
            Structure::OneHot(n) => obs_width + n,
            _ => obs_width,
        }
    }

    /// Input rows of branch `j` for a batch of robot-level rows.
    pub fn branch_input(&self, j: usize, space: InputSpace, rows: ArrayView2<f64>) -> Array2<f64> {
        match self {
            Structure::Symmetric(set) => match space {
                InputSpace::Observation => set.obs(j).apply_rows(rows),
                InputSpace::Action => set.act(j).apply_rows(rows),
            },
            Structure::OneHot(n) => match space {
                InputSpace::Observation => {
                    let mut out = Array2::zeros((rows.nrows(), rows.ncols() + n));
                    out.slice_mut(s![.., ..rows.ncols()]).assign(&rows);
                    out.column_mut(rows.ncols() + j).fill(1.0);
                    out
                }
                InputSpace::Action => rows.to_owned(),
            },
            Structure::Monolithic => rows.to_owned(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputSpace {
    Observation,
    Action,
}

/// Where each output of the shared policy head lands in the flat action.
///
/// The head emits `[a_c | a_s]`; `central[d]` is the flat index of central
/// dimension `d` and `agent[j][d]` the flat index of agent j's symmetric
/// dimension `d`. `sigma_class` ties log σ of paired planar components.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionMap {
    pub act_width: usize,
    pub central: Vec<usize>,
    pub agent: Vec<Vec<usize>>,
    /// Parameter index of log σ for each head output `[c | s]`.
    pub sigma_class: Vec<usize>,
    pub n_sigma: usize,
}

impl ActionMap {
    pub fn head_width(&self) -> usize {
        self.central.len() + self.agent.first().map(Vec::len).unwrap_or(0)
    }

    pub fn central_width(&self) -> usize {
        self.central.len()
    }

    pub fn agent_width(&self) -> usize {
        self.agent.first().map(Vec::len).unwrap_or(0)
    }

    /// Per-agent structure derived from the action layout.
    pub fn from_spec(spec: &SymmetrySpec, branches: usize) -> Result<Self> {
        let layout = spec.act_layout();
        let groups = layout.agent_groups(branches)?;
        for g in &groups {
            for &b in &g.blocks {
                if layout.blocks()[b].element_rule != ElementRule::Identity {
                    return Err(Error::layout(
                        &layout.blocks()[b].name,
                        "agent-indexed action blocks must use the identity rule for a shared policy",
                    ));
                }
            }
        }
        let central = layout.central_indices();
        let agent: Vec<Vec<usize>> = (0..branches)
            .map(|j| {
                groups
                    .iter()
                    .flat_map(|g| {
                        let off = layout.offset(g.blocks[j]);
                        off..off + g.width
                    })
                    .collect()
            })
            .collect();

        let (mut sigma_class, count) = sigma_classes(layout.blocks().iter().filter(|b| b.kind != BlockKind::AgentIndexed));
        let sym = agent.first().map(Vec::len).unwrap_or(0);
        sigma_class.extend(count..count + sym);
        Ok(Self {
            act_width: layout.total_width(),
            central,
            agent,
            sigma_class,
            n_sigma: count + sym,
        })
    }

    /// One head emits the whole flat action directly.
    pub fn monolithic(spec: &SymmetrySpec) -> Self {
        let layout = spec.act_layout();
        let act_width = layout.total_width();
        let (sigma_class, n_sigma) = sigma_classes(layout.blocks().iter());
        Self {
            act_width,
            central: Vec::new(),
            agent: vec![(0..act_width).collect()],
            sigma_class,
            n_sigma,
        }
    }

    /// log σ for every flat action dimension.
    pub fn flat_log_std(&self, params: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.act_width];
        let c = self.central.len();
        for (d, &idx) in self.central.iter().enumerate() {
            out[idx] = params[self.sigma_class[d]];
        }
        for slots in &self.agent {
            for (d, &idx) in slots.iter().enumerate() {
                out[idx] = params[self.sigma_class[c + d]];
            }
        }
        out
    }

    /// Accumulates flat-dimension gradients of log σ into parameter gradients.
    pub fn fold_log_std_grad(&self, flat_grad: &[f64], out: &mut [f64]) {
        let c = self.central.len();
        for (d, &idx) in self.central.iter().enumerate() {
            out[self.sigma_class[d]] += flat_grad[idx];
        }
        for slots in &self.agent {
            for (d, &idx) in slots.iter().enumerate() {
                out[self.sigma_class[c + d]] += flat_grad[idx];
            }
        }
    }
}

/// σ class per element of the given blocks, in order. Rotated pairs share one
/// σ so the distribution stays isotropic in their plane.
fn sigma_classes<'a>(blocks: impl Iterator<Item = &'a Block>) -> (Vec<usize>, usize) {
    let mut classes: Vec<usize> = Vec::new();
    let mut count = 0;
    for block in blocks {
        let base = classes.len();
        for e in 0..block.width {
            let partner = match &block.element_rule {
                ElementRule::PlanarRotate(pairs) => pairs.iter().find_map(|&(x, y)| (y == e).then_some(x)),
                _ => None,
            };
            match partner {
                Some(first) => classes.push(classes[base + first]),
                None => {
                    classes.push(count);
                    count += 1;
                }
            }
        }
    }
    (classes, count)
}
