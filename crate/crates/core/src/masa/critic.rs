use ndarray::{concatenate, Array1, Array2, ArrayView1, ArrayView2, Axis};

use super::structure::{InputSpace, Structure};
use crate::error::{Error, Result};
use crate::net::{Activation, NetArch, NetParams, Tape};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CriticMode {
    /// State value V(o).
    V,
    /// Action value Q(o, a).
    Q,
}

/// Shared feature network Ψ, mean-pooled over agent branches, then head Θ.
#[derive(Debug, Clone)]
pub struct Critic {
    structure: Structure,
    mode: CriticMode,
    obs_width: usize,
    act_width: usize,
    pub psi: NetParams,
    pub theta: NetParams,
}

#[derive(Debug, Clone)]
pub struct CriticTape {
    psi: Vec<Tape>,
    theta: Tape,
}

#[derive(Debug, Clone)]
pub struct CriticGrads {
    pub psi: NetParams,
    pub theta: NetParams,
}

impl CriticGrads {
    pub fn zeros_like(critic: &Critic) -> Self {
        Self {
            psi: critic.psi.zeros_like(),
            theta: critic.theta.zeros_like(),
        }
    }

    pub fn accumulate(&mut self, other: &CriticGrads) {
        self.psi.accumulate(&other.psi);
        self.theta.accumulate(&other.theta);
    }

    pub fn slices(&self) -> Vec<&[f64]> {
        let mut v = self.psi.slices();
        v.extend(self.theta.slices());
        v
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v = self.psi.slices_mut();
        v.extend(self.theta.slices_mut());
        v
    }
}

impl Critic {
    /// `hidden` = [h_1, .., h_k]: Ψ maps the input through h_1..h_k (last one
    /// activated, the pooled feature), Θ maps h_k → h_k → 1.
    pub fn new(
        structure: Structure,
        mode: CriticMode,
        obs_width: usize,
        act_width: usize,
        hidden: &[usize],
        activation: Activation,
        seed: u64,
    ) -> Result<Self> {
        let (&feature, front) = hidden
            .split_last()
            .ok_or_else(|| Error::config("critic_hidden", "at least one width is required"))?;
        if hidden.contains(&0) {
            return Err(Error::config("critic_hidden", "all widths must be at least 1"));
        }
        let input = structure.branch_input_width(obs_width) + if mode == CriticMode::Q { act_width } else { 0 };
        let psi_arch = NetArch {
            input,
            hidden: front.to_vec(),
            output: feature,
            activation,
            output_gain: std::f64::consts::SQRT_2,
            activate_output: true,
        };
        let theta_arch = NetArch::new(feature, vec![feature], 1, activation)?;
        Ok(Self {
            structure,
            mode,
            obs_width,
            act_width,
            psi: NetParams::init(&psi_arch, seed),
            theta: NetParams::init(&theta_arch, seed.wrapping_add(0x9e37_79b9_7f4a_7c15)),
        })
    }

    pub fn from_parts(structure: Structure, mode: CriticMode, obs_width: usize, act_width: usize, psi: NetParams, theta: NetParams) -> Result<Self> {
        let input = structure.branch_input_width(obs_width) + if mode == CriticMode::Q { act_width } else { 0 };
        if psi.input_width() != input {
            return Err(Error::Dimension {
                context: "critic feature input",
                expected: input,
                got: psi.input_width(),
            });
        }
        if theta.input_width() != psi.output_width() || theta.output_width() != 1 {
            return Err(Error::Dimension {
                context: "critic head",
                expected: psi.output_width(),
                got: theta.input_width(),
            });
        }
        Ok(Self {
            structure,
            mode,
            obs_width,
            act_width,
            psi,
            theta,
        })
    }

    pub fn mode(&self) -> CriticMode {
        self.mode
    }

    pub fn structure(&self) -> &Structure {
        &self.structure
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v = self.psi.slices_mut();
        v.extend(self.theta.slices_mut());
        v
    }

    pub fn slices(&self) -> Vec<&[f64]> {
        let mut v = self.psi.slices();
        v.extend(self.theta.slices());
        v
    }

    pub fn slice_sizes(&self) -> Vec<usize> {
        self.slices().iter().map(|s| s.len()).collect()
    }

    fn branch_inputs(&self, obs: ArrayView2<f64>, act: Option<ArrayView2<f64>>) -> Result<Vec<Array2<f64>>> {
        if obs.ncols() != self.obs_width {
            return Err(Error::Dimension {
                context: "critic observation",
                expected: self.obs_width,
                got: obs.ncols(),
            });
        }
        if let Some(a) = &act {
            if a.ncols() != self.act_width || a.nrows() != obs.nrows() {
                return Err(Error::Dimension {
                    context: "critic action",
                    expected: self.act_width,
                    got: a.ncols(),
                });
            }
        }
        Ok((0..self.structure.branches())
            .map(|j| {
                let o = self.structure.branch_input(j, InputSpace::Observation, obs);
                match &act {
                    Some(a) => {
                        let a = self.structure.branch_input(j, InputSpace::Action, *a);
                        concatenate(Axis(1), &[o.view(), a.view()]).expect("same batch")
                    }
                    None => o,
                }
            })
            .collect())
    }

    /// Per-branch features Ψ(T_j(o)) before pooling.
    pub fn branch_features(&self, obs: ArrayView2<f64>, act: Option<ArrayView2<f64>>) -> Result<Vec<Array2<f64>>> {
        self.branch_inputs(obs, act)?
            .iter()
            .map(|x| self.psi.predict(x.view()))
            .collect()
    }

    /// Θ applied to the arithmetic mean of the given per-agent features.
    pub fn head_from_features(&self, features: &[Array2<f64>]) -> Result<Array1<f64>> {
        let mut pooled = features[0].clone();
        for f in &features[1..] {
            pooled += f;
        }
        pooled /= features.len() as f64;
        Ok(self.theta.predict(pooled.view())?.column(0).to_owned())
    }

    fn evaluate(&self, obs: ArrayView2<f64>, act: Option<ArrayView2<f64>>) -> Result<(Array1<f64>, CriticTape)> {
        let inputs = self.branch_inputs(obs, act)?;
        let mut tapes = Vec::with_capacity(inputs.len());
        let mut pooled: Option<Array2<f64>> = None;
        for x in &inputs {
            let (f, tape) = self.psi.forward(x.view())?;
            pooled = Some(match pooled {
                Some(acc) => acc + &f,
                None => f,
            });
            tapes.push(tape);
        }
        let mut pooled = pooled.expect("at least one branch");
        pooled /= inputs.len() as f64;
        let (v, theta) = self.theta.forward(pooled.view())?;
        Ok((v.column(0).to_owned(), CriticTape { psi: tapes, theta }))
    }

    pub fn value(&self, obs: ArrayView2<f64>) -> Result<(Array1<f64>, CriticTape)> {
        if self.mode != CriticMode::V {
            return Err(Error::Unsupported("value() called on a Q-mode critic; use q()".into()));
        }
        self.evaluate(obs, None)
    }

    pub fn q(&self, obs: ArrayView2<f64>, act: ArrayView2<f64>) -> Result<(Array1<f64>, CriticTape)> {
        if self.mode != CriticMode::Q {
            return Err(Error::CriticMode);
        }
        self.evaluate(obs, Some(act))
    }

    pub fn value_one(&self, o: &[f64]) -> Result<f64> {
        let view = ArrayView2::from_shape((1, o.len()), o).expect("row");
        Ok(self.value(view)?.0[0])
    }

    pub fn q_one(&self, o: &[f64], a: &[f64]) -> Result<f64> {
        let ov = ArrayView2::from_shape((1, o.len()), o).expect("row");
        let av = ArrayView2::from_shape((1, a.len()), a).expect("row");
        Ok(self.q(ov, av)?.0[0])
    }

    /// Gradients of Σ upstream ⊙ output.
    pub fn backward(&self, tape: &CriticTape, upstream: ArrayView1<f64>) -> Result<CriticGrads> {
        if tape.psi.len() != self.structure.branches() || tape.theta.batch_size() != upstream.len() {
            return Err(Error::TapeMismatch("critic tape does not match this batch".into()));
        }
        let up = upstream.insert_axis(Axis(1));
        let (theta, mut d_pooled) = self.theta.backward(&tape.theta, up)?;
        d_pooled /= tape.psi.len() as f64;
        let mut psi = self.psi.zeros_like();
        for t in &tape.psi {
            let (g, _) = self.psi.backward(t, d_pooled.view())?;
            psi.accumulate(&g);
        }
        Ok(CriticGrads { psi, theta })
    }
}
