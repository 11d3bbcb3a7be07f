use ndarray::{s, Array1, Array2, ArrayView2};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::structure::{ActionMap, InputSpace, Structure};
use crate::error::{Error, Result};
use crate::net::{clamp_log_std, entropy, log_prob, log_prob_grads, Activation, NetArch, NetParams, Tape, LOG_STD_BOUNDS};
use crate::symmetry::SymmetrySpec;

/// Whole-robot action split into its central part and per-agent parts.
#[derive(Debug, Clone, PartialEq)]
pub struct JointAction {
    pub central: Vec<f64>,
    pub agents: Vec<Vec<f64>>,
    pub flat: Vec<f64>,
}

impl JointAction {
    pub fn from_flat(map: &ActionMap, flat: Vec<f64>) -> Self {
        Self {
            central: map.central.iter().map(|&k| flat[k]).collect(),
            agents: map.agent.iter().map(|slots| slots.iter().map(|&k| flat[k]).collect()).collect(),
            flat,
        }
    }

    /// Gathers central and per-agent parts back into act-layout order.
    pub fn gather(map: &ActionMap, central: &[f64], agents: &[Vec<f64>]) -> Vec<f64> {
        let mut flat = vec![0.0; map.act_width];
        for (&k, &v) in map.central.iter().zip(central) {
            flat[k] = v;
        }
        for (slots, values) in map.agent.iter().zip(agents) {
            for (&k, &v) in slots.iter().zip(values) {
                flat[k] = v;
            }
        }
        flat
    }
}

/// Shared-parameter Gaussian policy.
///
/// With [`Structure::Symmetric`] this is the equivariant policy: agent j's
/// symmetric action is Φ_s(T_j(o)) and the central action is
/// (1/N) Σ_j T_{N−1−j}(Φ_c(T_j(o))).
#[derive(Debug, Clone)]
pub struct Policy {
    structure: Structure,
    map: ActionMap,
    obs_width: usize,
    pub phi: NetParams,
    /// One entry per σ class (see [`ActionMap::sigma_class`]).
    pub log_std: Vec<f64>,
    pub log_std_bounds: (f64, f64),
}

#[derive(Debug, Clone)]
pub struct PolicyTape {
    branches: Vec<Tape>,
    batch: usize,
}

#[derive(Debug, Clone)]
pub struct PolicyGrads {
    pub phi: NetParams,
    pub log_std: Vec<f64>,
}

impl PolicyGrads {
    pub fn zeros_like(policy: &Policy) -> Self {
        Self {
            phi: policy.phi.zeros_like(),
            log_std: vec![0.0; policy.log_std.len()],
        }
    }

    pub fn accumulate(&mut self, other: &PolicyGrads) {
        self.phi.accumulate(&other.phi);
        self.log_std.iter_mut().zip(&other.log_std).for_each(|(a, b)| *a += b);
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v = self.phi.slices_mut();
        v.push(&mut self.log_std);
        v
    }

    pub fn slices(&self) -> Vec<&[f64]> {
        let mut v = self.phi.slices();
        v.push(&self.log_std);
        v
    }
}

impl Policy {
    pub fn new(structure: Structure, spec: &SymmetrySpec, hidden: &[usize], activation: Activation, seed: u64) -> Result<Self> {
        let map = match &structure {
            Structure::Monolithic => ActionMap::monolithic(spec),
            other => ActionMap::from_spec(spec, other.branches())?,
        };
        let arch = NetArch::new(structure.branch_input_width(spec.obs_width()), hidden.to_vec(), map.head_width(), activation)?
            .with_output_gain(0.01);
        let phi = NetParams::init(&arch, seed);
        Self::from_parts(structure, spec, phi, vec![0.0; map.n_sigma])
    }

    pub fn from_parts(structure: Structure, spec: &SymmetrySpec, phi: NetParams, log_std: Vec<f64>) -> Result<Self> {
        let map = match &structure {
            Structure::Monolithic => ActionMap::monolithic(spec),
            other => ActionMap::from_spec(spec, other.branches())?,
        };
        if phi.input_width() != structure.branch_input_width(spec.obs_width()) {
            return Err(Error::Dimension {
                context: "policy network input",
                expected: structure.branch_input_width(spec.obs_width()),
                got: phi.input_width(),
            });
        }
        if phi.output_width() != map.head_width() {
            return Err(Error::Dimension {
                context: "policy network output",
                expected: map.head_width(),
                got: phi.output_width(),
            });
        }
        if log_std.len() != map.n_sigma {
            return Err(Error::Dimension {
                context: "policy log_std",
                expected: map.n_sigma,
                got: log_std.len(),
            });
        }
        Ok(Self {
            structure,
            map,
            obs_width: spec.obs_width(),
            phi,
            log_std,
            log_std_bounds: LOG_STD_BOUNDS,
        })
    }

    pub fn structure(&self) -> &Structure {
        &self.structure
    }

    pub fn action_map(&self) -> &ActionMap {
        &self.map
    }

    pub fn obs_width(&self) -> usize {
        self.obs_width
    }

    pub fn act_width(&self) -> usize {
        self.map.act_width
    }

    pub fn param_count(&self) -> usize {
        self.phi.param_count() + self.log_std.len()
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v = self.phi.slices_mut();
        v.push(&mut self.log_std);
        v
    }

    pub fn slices(&self) -> Vec<&[f64]> {
        let mut v = self.phi.slices();
        v.push(&self.log_std);
        v
    }

    pub fn slice_sizes(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.phi.slices().iter().map(|s| s.len()).collect();
        v.push(self.log_std.len());
        v
    }

    /// Clamped log σ for each flat action dimension.
    pub fn flat_log_std(&self) -> Vec<f64> {
        let clamped: Vec<f64> = self.log_std.iter().map(|&l| clamp_log_std(l, self.log_std_bounds)).collect();
        self.map.flat_log_std(&clamped)
    }

    fn check_obs(&self, obs: &ArrayView2<f64>) -> Result<()> {
        if obs.ncols() != self.obs_width {
            return Err(Error::Dimension {
                context: "policy observation",
                expected: self.obs_width,
                got: obs.ncols(),
            });
        }
        Ok(())
    }

    /// Mean flat action for a batch of observations.
    pub fn mean(&self, obs: ArrayView2<f64>) -> Result<(Array2<f64>, PolicyTape)> {
        self.check_obs(&obs)?;
        let n = self.structure.branches();
        let c = self.map.central_width();
        let batch = obs.nrows();
        let mut flat = Array2::zeros((batch, self.map.act_width));
        let mut central = Array2::<f64>::zeros((batch, c));
        let mut tapes = Vec::with_capacity(n);
        for j in 0..n {
            let input = self.structure.branch_input(j, InputSpace::Observation, obs);
            let (y, tape) = self.phi.forward(input.view())?;
            for (d, &k) in self.map.agent[j].iter().enumerate() {
                flat.column_mut(k).assign(&y.column(c + d));
            }
            if c > 0 {
                let head_c = y.slice(s![.., ..c]);
                match &self.structure {
                    Structure::Symmetric(set) => central += &set.central_act(n - 1 - j).apply_rows(head_c),
                    _ => central += &head_c,
                }
            }
            tapes.push(tape);
        }
        if c > 0 {
            central /= n as f64;
            for (d, &k) in self.map.central.iter().enumerate() {
                flat.column_mut(k).assign(&central.column(d));
            }
        }
        Ok((flat, PolicyTape { branches: tapes, batch }))
    }

    /// Gradients of Σ upstream ⊙ mean w.r.t. Φ (log σ untouched).
    pub fn backward_mean(&self, tape: &PolicyTape, upstream: ArrayView2<f64>) -> Result<NetParams> {
        let n = self.structure.branches();
        if tape.branches.len() != n || upstream.nrows() != tape.batch || upstream.ncols() != self.map.act_width {
            return Err(Error::TapeMismatch("policy tape does not match this batch".into()));
        }
        let c = self.map.central_width();
        let head = self.map.head_width();
        let mut d_central = Array2::<f64>::zeros((tape.batch, c));
        for (d, &k) in self.map.central.iter().enumerate() {
            d_central.column_mut(d).assign(&upstream.column(k));
        }
        d_central /= n as f64;
        let mut grads = self.phi.zeros_like();
        for j in 0..n {
            let mut dy = Array2::<f64>::zeros((tape.batch, head));
            for (d, &k) in self.map.agent[j].iter().enumerate() {
                dy.column_mut(c + d).assign(&upstream.column(k));
            }
            if c > 0 {
                let back = match &self.structure {
                    Structure::Symmetric(set) => set.central_act(n - 1 - j).apply_transpose_rows(d_central.view()),
                    _ => d_central.clone(),
                };
                dy.slice_mut(s![.., ..c]).assign(&back);
            }
            let (g, _) = self.phi.backward(&tape.branches[j], dy.view())?;
            grads.accumulate(&g);
        }
        Ok(grads)
    }

    /// Folds flat-dimension log σ gradients into the σ parameters, honouring the clamp.
    pub fn fold_log_std_grad(&self, flat_grad: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.log_std.len()];
        self.map.fold_log_std_grad(flat_grad, &mut out);
        for (g, &l) in out.iter_mut().zip(&self.log_std) {
            if l < self.log_std_bounds.0 || l > self.log_std_bounds.1 {
                *g = 0.0;
            }
        }
        out
    }

    /// Mean action for one observation, split per agent.
    pub fn joint_mean(&self, o: &[f64]) -> Result<JointAction> {
        let view = ArrayView2::from_shape((1, o.len()), o).map_err(|_| Error::Dimension {
            context: "policy observation",
            expected: self.obs_width,
            got: o.len(),
        })?;
        let (mean, _) = self.mean(view)?;
        Ok(JointAction::from_flat(&self.map, mean.row(0).to_vec()))
    }

    /// Samples an action (noise added to the merged flat mean) and its log density.
    pub fn sample(&self, o: &[f64], rng: &mut impl Rng) -> Result<(JointAction, f64)> {
        let mean = self.joint_mean(o)?.flat;
        let log_std = self.flat_log_std();
        let action: Vec<f64> = mean
            .iter()
            .zip(&log_std)
            .map(|(&m, &l)| {
                let eps: f64 = StandardNormal.sample(rng);
                m + l.exp() * eps
            })
            .collect();
        let lp = log_prob(&mean, &log_std, &action);
        Ok((JointAction::from_flat(&self.map, action), lp))
    }

    /// log π(a | o) for one observation.
    pub fn log_prob(&self, o: &[f64], action: &[f64]) -> Result<f64> {
        if action.len() != self.map.act_width {
            return Err(Error::Dimension {
                context: "policy action",
                expected: self.map.act_width,
                got: action.len(),
            });
        }
        let mean = self.joint_mean(o)?.flat;
        Ok(log_prob(&mean, &self.flat_log_std(), action))
    }

    /// Row-wise log densities of `actions` under means `mean`.
    pub fn log_prob_rows(&self, mean: ArrayView2<f64>, actions: ArrayView2<f64>) -> Array1<f64> {
        let log_std = self.flat_log_std();
        mean.rows()
            .into_iter()
            .zip(actions.rows())
            .map(|(m, a)| log_prob(&m.to_vec(), &log_std, &a.to_vec()))
            .collect()
    }

    /// Gradients of Σ_b weights[b]·log π(a_b | o_b) given the forward tape and means.
    pub fn log_prob_backward(&self, tape: &PolicyTape, mean: ArrayView2<f64>, actions: ArrayView2<f64>, weights: &[f64]) -> Result<PolicyGrads> {
        if weights.len() != tape.batch || mean.nrows() != tape.batch || actions.nrows() != tape.batch {
            return Err(Error::TapeMismatch("policy tape does not match this batch".into()));
        }
        let log_std = self.flat_log_std();
        let mut d_mean = Array2::<f64>::zeros(mean.raw_dim());
        let mut d_log_std = vec![0.0; log_std.len()];
        for (b, &w) in weights.iter().enumerate() {
            let m = mean.row(b).to_vec();
            let a = actions.row(b).to_vec();
            let mut row = vec![0.0; m.len()];
            log_prob_grads(&m, &log_std, &a, w, &mut row, &mut d_log_std);
            d_mean.row_mut(b).assign(&Array1::from(row));
        }
        Ok(PolicyGrads {
            phi: self.backward_mean(tape, d_mean.view())?,
            log_std: self.fold_log_std_grad(&d_log_std),
        })
    }

    /// Entropy of the action distribution (state independent).
    pub fn entropy(&self) -> f64 {
        entropy(&self.flat_log_std())
    }

    /// d entropy / d log σ parameters.
    pub fn entropy_grad(&self) -> Vec<f64> {
        self.fold_log_std_grad(&vec![1.0; self.map.act_width])
    }
}
