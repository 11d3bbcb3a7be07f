use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Elu,
    Tanh,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Elu => {
                if z > 0.0 {
                    z
                } else {
                    z.exp_m1()
                }
            }
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the activation output.
    #[inline]
    fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Elu => {
                if a > 0.0 {
                    1.0
                } else {
                    a + 1.0
                }
            }
            Activation::Tanh => 1.0 - a * a,
        }
    }
}

/// Dense feed-forward architecture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetArch {
    pub input: usize,
    pub hidden: Vec<usize>,
    pub output: usize,
    pub activation: Activation,
    /// Scale of the orthogonal initialisation of the last layer.
    pub output_gain: f64,
    /// Apply the activation to the output layer too (feature extractors).
    pub activate_output: bool,
}

impl NetArch {
    pub fn new(input: usize, hidden: Vec<usize>, output: usize, activation: Activation) -> Result<Self> {
        let arch = Self {
            input,
            hidden,
            output,
            activation,
            output_gain: 1.0,
            activate_output: false,
        };
        arch.validate()?;
        Ok(arch)
    }

    /// `[input, hidden.., output]` with ELU activations.
    pub fn from_widths(widths: &[usize]) -> Result<Self> {
        if widths.len() < 3 {
            return Err(Error::config("layer_widths", "need input, at least one hidden layer and output"));
        }
        Self::new(widths[0], widths[1..widths.len() - 1].to_vec(), widths[widths.len() - 1], Activation::Elu)
    }

    pub fn with_output_gain(mut self, gain: f64) -> Self {
        self.output_gain = gain;
        self
    }

    pub fn with_activated_output(mut self) -> Self {
        self.activate_output = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden.is_empty() {
            return Err(Error::config("layer_widths", "at least one hidden layer is required"));
        }
        if self.input == 0 || self.output == 0 || self.hidden.contains(&0) {
            return Err(Error::config("layer_widths", "all widths must be at least 1"));
        }
        Ok(())
    }

    pub fn widths(&self) -> Vec<usize> {
        let mut w = vec![self.input];
        w.extend(&self.hidden);
        w.push(self.output);
        w
    }

    pub fn param_count(&self) -> usize {
        self.widths().windows(2).map(|p| p[0] * p[1] + p[1]).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    /// `input × output`, so a batch forward is `X · W + b`.
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

/// Weights and biases of a dense network. Also used to hold gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct NetParams {
    pub activation: Activation,
    pub activate_output: bool,
    pub output_gain: f64,
    pub layers: Vec<Layer>,
}

/// Activations recorded by a forward pass.
#[derive(Debug, Clone)]
pub struct Tape {
    inputs: Vec<Array2<f64>>,
    outputs: Vec<Array2<f64>>,
}

impl Tape {
    pub fn batch_size(&self) -> usize {
        self.inputs.first().map(|x| x.nrows()).unwrap_or(0)
    }
}

impl NetParams {
    /// Orthogonal initialisation (gain √2 on hidden layers), zero biases.
    pub fn init(arch: &NetArch, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let widths = arch.widths();
        let last = widths.len() - 2;
        let layers = widths
            .windows(2)
            .enumerate()
            .map(|(l, pair)| {
                let gain = if l == last { arch.output_gain } else { std::f64::consts::SQRT_2 };
                Layer {
                    weight: orthogonal(pair[0], pair[1], gain, &mut rng),
                    bias: Array1::zeros(pair[1]),
                }
            })
            .collect();
        Self {
            activation: arch.activation,
            activate_output: arch.activate_output,
            output_gain: arch.output_gain,
            layers,
        }
    }

    /// Builds a network from explicit layers (no hidden-layer requirement).
    pub fn from_layers(layers: Vec<Layer>, activation: Activation) -> Result<Self> {
        for pair in layers.windows(2) {
            if pair[0].weight.ncols() != pair[1].weight.nrows() {
                return Err(Error::Dimension {
                    context: "layer chain",
                    expected: pair[0].weight.ncols(),
                    got: pair[1].weight.nrows(),
                });
            }
        }
        for layer in &layers {
            if layer.bias.len() != layer.weight.ncols() {
                return Err(Error::Dimension {
                    context: "layer bias",
                    expected: layer.weight.ncols(),
                    got: layer.bias.len(),
                });
            }
        }
        Ok(Self {
            activation,
            activate_output: false,
            output_gain: 1.0,
            layers,
        })
    }

    pub fn arch(&self) -> NetArch {
        let widths = self.widths();
        NetArch {
            input: widths[0],
            hidden: widths[1..widths.len() - 1].to_vec(),
            output: widths[widths.len() - 1],
            activation: self.activation,
            output_gain: self.output_gain,
            activate_output: self.activate_output,
        }
    }

    pub fn widths(&self) -> Vec<usize> {
        let mut w = vec![self.layers[0].weight.nrows()];
        w.extend(self.layers.iter().map(|l| l.weight.ncols()));
        w
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].weight.nrows()
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().expect("non-empty").weight.ncols()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            activation: self.activation,
            activate_output: self.activate_output,
            output_gain: self.output_gain,
            layers: self
                .layers
                .iter()
                .map(|l| Layer {
                    weight: Array2::zeros(l.weight.raw_dim()),
                    bias: Array1::zeros(l.bias.len()),
                })
                .collect(),
        }
    }

    /// Parameters in checkpoint order: per layer, W row-major then b.
    pub fn slices(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| {
                [
                    l.weight.as_slice().expect("standard layout"),
                    l.bias.as_slice().expect("standard layout"),
                ]
            })
            .collect()
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| {
                [
                    l.weight.as_slice_mut().expect("standard layout"),
                    l.bias.as_slice_mut().expect("standard layout"),
                ]
            })
            .collect()
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.slices().concat()
    }

    pub fn load_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::Dimension {
                context: "flat parameters",
                expected: self.param_count(),
                got: flat.len(),
            });
        }
        let mut at = 0;
        for s in self.slices_mut() {
            s.copy_from_slice(&flat[at..at + s.len()]);
            at += s.len();
        }
        Ok(())
    }

    /// Adds `other` into `self` element-wise (gradient accumulation).
    pub fn accumulate(&mut self, other: &NetParams) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.weight += &b.weight;
            a.bias += &b.bias;
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for l in &mut self.layers {
            l.weight *= factor;
            l.bias *= factor;
        }
    }

    /// Batched forward pass; rows of `x` are samples.
    pub fn forward(&self, x: ArrayView2<f64>) -> Result<(Array2<f64>, Tape)> {
        if x.ncols() != self.input_width() {
            return Err(Error::Dimension {
                context: "network input",
                expected: self.input_width(),
                got: x.ncols(),
            });
        }
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut outputs = Vec::with_capacity(self.layers.len());
        let mut current = x.to_owned();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = current.dot(&layer.weight);
            z += &layer.bias;
            if l < last || self.activate_output {
                let act = self.activation;
                z.mapv_inplace(|v| act.apply(v));
            }
            inputs.push(current);
            current = z.clone();
            outputs.push(z);
        }
        Ok((current, Tape { inputs, outputs }))
    }

    /// Forward pass without keeping a tape.
    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.input_width() {
            return Err(Error::Dimension {
                context: "network input",
                expected: self.input_width(),
                got: x.ncols(),
            });
        }
        let last = self.layers.len() - 1;
        let mut current = x.to_owned();
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = current.dot(&layer.weight);
            z += &layer.bias;
            if l < last || self.activate_output {
                let act = self.activation;
                z.mapv_inplace(|v| act.apply(v));
            }
            current = z;
        }
        Ok(current)
    }

    /// Gradients of `sum(upstream ⊙ y)` w.r.t. parameters and input.
    pub fn backward(&self, tape: &Tape, upstream: ArrayView2<f64>) -> Result<(NetParams, Array2<f64>)> {
        if tape.inputs.len() != self.layers.len() {
            return Err(Error::TapeMismatch(format!(
                "tape has {} layers, network has {}",
                tape.inputs.len(),
                self.layers.len()
            )));
        }
        for (layer, input) in self.layers.iter().zip(&tape.inputs) {
            if input.ncols() != layer.weight.nrows() {
                return Err(Error::TapeMismatch("layer widths differ".into()));
            }
        }
        if upstream.dim() != tape.outputs.last().expect("non-empty").dim() {
            return Err(Error::TapeMismatch("upstream gradient shape differs from output".into()));
        }
        let mut grads = self.zeros_like();
        let last = self.layers.len() - 1;
        let mut delta = upstream.to_owned();
        for l in (0..self.layers.len()).rev() {
            if l < last || self.activate_output {
                let act = self.activation;
                ndarray::Zip::from(&mut delta)
                    .and(&tape.outputs[l])
                    .for_each(|d, &a| *d *= act.derivative_from_output(a));
            }
            grads.layers[l].weight.assign(&tape.inputs[l].t().dot(&delta));
            grads.layers[l].bias.assign(&delta.sum_axis(Axis(0)));
            delta = delta.dot(&self.layers[l].weight.t());
        }
        Ok((grads, delta))
    }

    pub fn forward_vec(&self, x: &[f64]) -> Result<(Vec<f64>, Tape)> {
        let view = ArrayView2::from_shape((1, x.len()), x).expect("row vector");
        let (y, tape) = self.forward(view)?;
        Ok((y.iter().copied().collect(), tape))
    }

    pub fn backward_vec(&self, tape: &Tape, upstream: &[f64]) -> Result<(NetParams, Vec<f64>)> {
        let view = ArrayView2::from_shape((1, upstream.len()), upstream).expect("row vector");
        let (g, dx) = self.backward(tape, view)?;
        Ok((g, dx.iter().copied().collect()))
    }
}

/// `rows × cols` matrix with orthonormal rows or columns (whichever is fewer), times `gain`.
fn orthogonal(rows: usize, cols: usize, gain: f64, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let (short, long) = if rows >= cols { (cols, rows) } else { (rows, cols) };
    let mut vecs: Vec<Vec<f64>> = Vec::with_capacity(short);
    while vecs.len() < short {
        let mut v: Vec<f64> = (0..long).map(|_| StandardNormal.sample(rng)).collect();
        for u in &vecs {
            let dot: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(u).for_each(|(a, b)| *a -= dot * b);
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm < 1e-10 {
            continue;
        }
        v.iter_mut().for_each(|a| *a /= norm);
        vecs.push(v);
    }
    Array2::from_shape_fn((rows, cols), |(r, c)| {
        let value = if rows >= cols { vecs[c][r] } else { vecs[r][c] };
        gain * value
    })
}

#[cfg(test)]
mod tests {
    use ndarray::{arr1, arr2, Array2};
    use rand::Rng;

    use super::*;

    #[test]
    fn param_count_matches_shape_arithmetic() {
        let arch = NetArch::from_widths(&[4, 8, 2]).unwrap();
        assert_eq!(arch.param_count(), 58);
        assert_eq!(NetParams::init(&arch, 0).param_count(), 58);
    }

    #[test]
    fn arch_without_hidden_layer_rejected() {
        assert!(NetArch::from_widths(&[4, 2]).is_err());
        assert!(NetArch::from_widths(&[4, 0, 2]).is_err());
    }

    #[test]
    fn init_is_deterministic_per_seed() {
        let arch = NetArch::from_widths(&[5, 16, 3]).unwrap();
        assert_eq!(NetParams::init(&arch, 9).to_flat(), NetParams::init(&arch, 9).to_flat());
        assert_ne!(NetParams::init(&arch, 9).to_flat(), NetParams::init(&arch, 10).to_flat());
    }

    #[test]
    fn orthogonal_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = orthogonal(16, 4, 1.0, &mut rng);
        let gram = w.t().dot(&w);
        for r in 0..4 {
            for c in 0..4 {
                let target = if r == c { 1.0 } else { 0.0 };
                assert!((gram[[r, c]] - target).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn identity_linear_layer() {
        let net = NetParams::from_layers(
            vec![Layer {
                weight: Array2::eye(2),
                bias: arr1(&[0.0, 0.0]),
            }],
            Activation::Elu,
        )
        .unwrap();
        let (y, _) = net.forward_vec(&[1.0, 2.0]).unwrap();
        assert_eq!(y, vec![1.0, 2.0]);
    }

    #[test]
    fn zero_weights_give_bias() {
        let arch = NetArch::from_widths(&[3, 4, 2]).unwrap();
        let mut net = NetParams::init(&arch, 0);
        for l in &mut net.layers {
            l.weight.fill(0.0);
        }
        net.layers[1].bias = arr1(&[0.25, -1.5]);
        let (y, _) = net.forward_vec(&[9.0, -3.0, 1.0]).unwrap();
        assert_eq!(y, vec![0.25, -1.5]);
    }

    #[test]
    fn forward_is_deterministic() {
        let net = NetParams::init(&NetArch::from_widths(&[3, 7, 5, 2]).unwrap(), 4);
        let x = [0.3, -0.2, 1.1];
        assert_eq!(net.forward_vec(&x).unwrap().0, net.forward_vec(&x).unwrap().0);
    }

    #[test]
    fn forward_rejects_wrong_width() {
        let net = NetParams::init(&NetArch::from_widths(&[3, 7, 2]).unwrap(), 4);
        assert!(matches!(net.forward_vec(&[1.0]), Err(Error::Dimension { .. })));
    }

    #[test]
    fn linear_layer_weight_gradient_is_outer_product() {
        let net = NetParams::from_layers(
            vec![Layer {
                weight: arr2(&[[0.5, -1.0, 2.0], [0.1, 0.2, 0.3]]),
                bias: arr1(&[0.0, 0.0, 0.0]),
            }],
            Activation::Elu,
        )
        .unwrap();
        let x = [1.5, -2.0];
        let up = [0.3, -0.7, 1.1];
        let (_, tape) = net.forward_vec(&x).unwrap();
        let (g, dx) = net.backward_vec(&tape, &up).unwrap();
        for (i, xi) in x.iter().enumerate() {
            for (o, uo) in up.iter().enumerate() {
                assert_eq!(g.layers[0].weight[[i, o]], xi * uo);
            }
        }
        assert_eq!(g.layers[0].bias.to_vec(), up.to_vec());
        assert!((dx[0] - 3.05).abs() < 1e-12);
        assert!((dx[1] - (0.1 * 0.3 - 0.2 * 0.7 + 0.3 * 1.1)).abs() < 1e-12);
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let net = NetParams::init(&NetArch::from_widths(&[3, 5, 2]).unwrap(), 2);
        let (_, tape) = net.forward_vec(&[0.1, 0.2, 0.3]).unwrap();
        let (g, dx) = net.backward_vec(&tape, &[0.0, 0.0]).unwrap();
        assert!(g.to_flat().iter().all(|&v| v == 0.0));
        assert!(dx.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn mismatched_tape_rejected() {
        let a = NetParams::init(&NetArch::from_widths(&[3, 5, 2]).unwrap(), 2);
        let b = NetParams::init(&NetArch::from_widths(&[3, 5, 4, 2]).unwrap(), 2);
        let (_, tape) = a.forward_vec(&[0.1, 0.2, 0.3]).unwrap();
        assert!(matches!(b.backward_vec(&tape, &[1.0, 1.0]), Err(Error::TapeMismatch(_))));
    }

    /// Central finite differences of L = Σ up ⊙ f(x) w.r.t. every parameter.
    fn finite_difference(net: &NetParams, x: &[f64], up: &[f64], h: f64) -> Vec<f64> {
        let loss = |n: &NetParams| -> f64 { n.forward_vec(x).unwrap().0.iter().zip(up).map(|(a, b)| a * b).sum() };
        let flat = net.to_flat();
        let mut probe = net.clone();
        (0..flat.len())
            .map(|k| {
                let mut p = flat.clone();
                p[k] += h;
                probe.load_flat(&p).unwrap();
                let plus = loss(&probe);
                p[k] -= 2.0 * h;
                probe.load_flat(&p).unwrap();
                let minus = loss(&probe);
                (plus - minus) / (2.0 * h)
            })
            .collect()
    }

    fn relative_error(a: f64, b: f64) -> f64 {
        (a - b).abs() / (a.abs() + b.abs()).max(1e-6)
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut worst: f64 = 0.0;
        for trial in 0..100 {
            let input = rng.random_range(1..5);
            let hidden: Vec<usize> = (0..rng.random_range(1..3)).map(|_| rng.random_range(2..7)).collect();
            let output = rng.random_range(1..4);
            let act = if trial % 2 == 0 { Activation::Elu } else { Activation::Tanh };
            let arch = NetArch::new(input, hidden, output, act).unwrap();
            let net = NetParams::init(&arch, trial);
            let x: Vec<f64> = (0..input).map(|_| rng.random_range(-1.5..1.5)).collect();
            let up: Vec<f64> = (0..output).map(|_| rng.random_range(-1.0..1.0)).collect();
            let (_, tape) = net.forward_vec(&x).unwrap();
            let (g, _) = net.backward_vec(&tape, &up).unwrap();
            let fd = finite_difference(&net, &x, &up, 1e-5);
            for (a, b) in g.to_flat().iter().zip(&fd) {
                worst = worst.max(relative_error(*a, *b));
            }
        }
        assert!(worst <= 1e-4, "worst relative error {worst}");
    }

    #[test]
    fn elu_net_3_5_2_matches_finite_differences() {
        let net = NetParams::init(&NetArch::from_widths(&[3, 5, 2]).unwrap(), 77);
        let x = [0.4, -0.9, 0.2];
        let up = [1.0, -0.5];
        let (_, tape) = net.forward_vec(&x).unwrap();
        let (g, _) = net.backward_vec(&tape, &up).unwrap();
        let fd = finite_difference(&net, &x, &up, 1e-5);
        let worst = g.to_flat().iter().zip(&fd).map(|(a, b)| relative_error(*a, *b)).fold(0.0, f64::max);
        assert!(worst <= 1e-4, "{worst}");
    }
}
