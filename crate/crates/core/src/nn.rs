//! Small MLP building blocks shared by the disentanglement model and the
//! multi-task classifier.
//!
//! Each layer owns plain tensors; a training step stages them onto a tape
//! with [`Mlp::stage`] and reads gradients back through the returned vars.
//! The plain [`Mlp::forward`] path reuses the same matrix kernels without
//! recording anything.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::gradcore::{GradError, Tape, Tensor, Var};
use crate::linalg;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Linear,
    Relu,
    Tanh,
    Sigmoid,
}

impl Activation {
    fn apply_tape<S: Scalar>(self, tape: &mut Tape<S>, x: Var) -> Var {
        match self {
            Activation::Linear => x,
            Activation::Relu => tape.relu(x),
            Activation::Tanh => tape.tanh(x),
            Activation::Sigmoid => tape.sigmoid(x),
        }
    }

    fn apply_value<S: Scalar>(self, data: &mut [S]) {
        let one = S::one();
        match self {
            Activation::Linear => {}
            Activation::Relu => {
                for v in data.iter_mut() {
                    if *v < S::zero() {
                        *v = S::zero();
                    }
                }
            }
            Activation::Tanh => {
                for v in data.iter_mut() {
                    *v = v.tanh();
                }
            }
            Activation::Sigmoid => {
                for v in data.iter_mut() {
                    *v = one / (one + (-*v).exp());
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Dense<S> {
    pub weight: Tensor<S>, // [in, out]
    pub bias: Tensor<S>,   // [out]
}

impl<S: Scalar> Dense<S> {
    /// Glorot-uniform weights, zero bias. Draws happen in f64 so f32 and f64
    /// models see the same underlying stream.
    pub fn glorot(fan_in: usize, fan_out: usize, rng: &mut ChaCha8Rng) -> Self {
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let data = (0..fan_in * fan_out)
            .map(|_| S::from_f64(rng.gen_range(-limit..limit)))
            .collect();
        Self {
            weight: Tensor::new(vec![fan_in, fan_out], data).expect("init shape"),
            bias: Tensor::zeros(&[fan_out]),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Mlp<S> {
    pub layers: Vec<Dense<S>>,
    activations: Vec<Activation>,
}

impl<S: Scalar> Mlp<S> {
    /// `dims` lists layer widths input-first; hidden layers use `hidden`,
    /// the last layer uses `output`.
    pub fn new(dims: &[usize], hidden: Activation, output: Activation, rng: &mut ChaCha8Rng) -> Self {
        assert!(dims.len() >= 2, "an MLP needs at least one layer");
        let mut layers = Vec::new();
        let mut activations = Vec::new();
        for w in dims.windows(2) {
            layers.push(Dense::glorot(w[0], w[1], rng));
        }
        for i in 0..layers.len() {
            activations.push(if i + 1 == layers.len() { output } else { hidden });
        }
        Self { layers, activations }
    }

    /// Assemble from explicit layers, e.g. hand-constructed fixtures.
    pub fn from_layers(layers: Vec<Dense<S>>, activations: Vec<Activation>) -> Self {
        assert_eq!(layers.len(), activations.len());
        assert!(!layers.is_empty());
        Self { layers, activations }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weight.shape()[0]
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().weight.shape()[1]
    }

    /// Plain forward on a `[batch, input_dim]` tensor.
    pub fn forward(&self, x: &Tensor<S>) -> Tensor<S> {
        let mut rows = x.shape()[0];
        if x.rank() == 1 {
            rows = 1;
        }
        let mut cur = x.data().to_vec();
        let mut width = self.input_dim();
        for (dense, act) in self.layers.iter().zip(&self.activations) {
            let out_dim = dense.weight.shape()[1];
            let mut out = linalg::matmul(&cur, dense.weight.data(), rows, width, out_dim);
            let bias = dense.bias.data();
            for row in out.chunks_mut(out_dim) {
                for j in 0..out_dim {
                    row[j] += bias[j];
                }
            }
            act.apply_value(&mut out);
            cur = out;
            width = out_dim;
        }
        if x.rank() == 1 {
            Tensor::new(vec![width], cur).expect("forward shape")
        } else {
            Tensor::new(vec![rows, width], cur).expect("forward shape")
        }
    }

    /// Put every parameter on the tape; the result can run tape forwards.
    pub fn stage(&self, tape: &mut Tape<S>) -> StagedMlp {
        let vars = self
            .layers
            .iter()
            .map(|d| (tape.leaf(d.weight.clone()), tape.leaf(d.bias.clone())))
            .collect();
        StagedMlp {
            vars,
            activations: self.activations.clone(),
        }
    }

    pub fn params(&self) -> Vec<&Tensor<S>> {
        self.layers
            .iter()
            .flat_map(|d| [&d.weight, &d.bias])
            .collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor<S>> {
        self.layers
            .iter_mut()
            .flat_map(|d| [&mut d.weight, &mut d.bias])
            .collect()
    }
}

pub struct StagedMlp {
    vars: Vec<(Var, Var)>,
    activations: Vec<Activation>,
}

impl StagedMlp {
    /// Assemble from already-staged `(weight, bias)` vars. Used where the
    /// parameters enter the tape through some other route, e.g. gradient
    /// checks that differentiate with respect to the weights themselves.
    pub fn from_vars(vars: Vec<(Var, Var)>, activations: Vec<Activation>) -> Self {
        assert_eq!(vars.len(), activations.len());
        Self { vars, activations }
    }

    pub fn forward<S: Scalar>(&self, tape: &mut Tape<S>, x: Var) -> Result<Var, GradError> {
        let mut cur = x;
        for ((w, b), act) in self.vars.iter().zip(&self.activations) {
            cur = tape.affine(cur, *w, *b)?;
            cur = act.apply_tape(tape, cur);
        }
        Ok(cur)
    }

    /// Parameter vars in the same order as [`Mlp::params`].
    pub fn param_vars(&self) -> Vec<Var> {
        self.vars.iter().flat_map(|&(w, b)| [w, b]).collect()
    }
}
