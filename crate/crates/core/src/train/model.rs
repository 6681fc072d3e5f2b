use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, RngStream, Sample, Target};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Linear,
    Mlp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative given the pre-activation `z` and the activation `a = apply(z)`.
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - a * a,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// `0.5 * (y_hat - y)^2` on a single output.
    MeanSquaredError,
    /// Softmax cross-entropy over the outputs.
    CrossEntropy,
}

/// A stack of dense layers with flat parameter storage.
///
/// Layer `l` maps `layer_sizes[l]` inputs to `layer_sizes[l + 1]` outputs and stores its
/// weights row-major (one row per output) followed by its biases. The last layer is linear;
/// hidden layers apply `activation`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Model {
    kind: ModelKind,
    layer_sizes: Vec<usize>,
    activation: Activation,
    params: Vec<f64>,
}

struct Layer {
    inputs: usize,
    outputs: usize,
    offset: usize,
}

impl Layer {
    fn weight(&self, params: &[f64], out: usize, inp: usize) -> f64 {
        params[self.offset + out * self.inputs + inp]
    }

    fn bias_offset(&self) -> usize {
        self.offset + self.outputs * self.inputs
    }

    fn len(&self) -> usize {
        self.outputs * (self.inputs + 1)
    }
}

/// Forward activations kept for backprop. `acts[0]` is the input; `pre[l]` feeds `acts[l + 1]`.
struct Trace {
    pre: Vec<Vec<f64>>,
    acts: Vec<Vec<f64>>,
}

impl Model {
    pub fn linear(inputs: usize, outputs: usize) -> Result<Self> {
        Self::build(ModelKind::Linear, vec![inputs, outputs], Activation::Relu)
    }

    pub fn mlp(layer_sizes: Vec<usize>, activation: Activation) -> Result<Self> {
        if layer_sizes.len() < 3 {
            return Err(Error::InvalidConfig("an MLP needs at least one hidden layer".into()));
        }
        Self::build(ModelKind::Mlp, layer_sizes, activation)
    }

    /// One hidden layer of 16 ReLU units.
    pub fn simple_mlp(inputs: usize, outputs: usize) -> Result<Self> {
        Self::mlp(vec![inputs, 16, outputs], Activation::Relu)
    }

    /// Two hidden layers of 32 ReLU units.
    pub fn two_layer_mlp(inputs: usize, outputs: usize) -> Result<Self> {
        Self::mlp(vec![inputs, 32, 32, outputs], Activation::Relu)
    }

    fn build(kind: ModelKind, layer_sizes: Vec<usize>, activation: Activation) -> Result<Self> {
        if layer_sizes.len() < 2 || layer_sizes.contains(&0) {
            return Err(Error::InvalidConfig(format!("bad layer sizes {layer_sizes:?}")));
        }
        let count = layer_sizes.windows(2).map(|w| w[1] * (w[0] + 1)).sum();
        Ok(Self { kind, layer_sizes, activation, params: vec![0.0; count] })
    }

    /// Fan-in scaled uniform `U(-1/sqrt(fan_in), 1/sqrt(fan_in))` for weights and biases.
    pub fn initialize(&mut self, rng: &mut RngStream) {
        for layer in self.layers() {
            let bound = 1.0 / (layer.inputs as f64).sqrt();
            for p in &mut self.params[layer.offset..layer.offset + layer.len()] {
                *p = rng.random_range(-bound..bound);
            }
        }
    }

    pub fn initialized(mut self, rng: &mut RngStream) -> Self {
        self.initialize(rng);
        self
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().expect("at least two layer sizes")
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn set_params(&mut self, params: Vec<f64>) -> Result<()> {
        if params.len() != self.params.len() {
            return Err(Error::DimensionMismatch { expected: self.params.len(), got: params.len() });
        }
        self.params = params;
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    /// Parameter range of the output layer.
    pub fn last_layer_range(&self) -> std::ops::Range<usize> {
        let last = self.layers().pop().expect("at least one layer");
        last.offset..last.offset + last.len()
    }

    fn layers(&self) -> Vec<Layer> {
        let mut offset = 0;
        self.layer_sizes
            .windows(2)
            .map(|w| {
                let layer = Layer { inputs: w[0], outputs: w[1], offset };
                offset += layer.len();
                layer
            })
            .collect()
    }

    fn check_input(&self, features: &[f64]) -> Result<()> {
        if features.len() != self.input_dim() {
            return Err(Error::DimensionMismatch { expected: self.input_dim(), got: features.len() });
        }
        Ok(())
    }

    fn trace(&self, features: &[f64]) -> Result<Trace> {
        self.check_input(features)?;
        let layers = self.layers();
        let mut pre = Vec::with_capacity(layers.len());
        let mut acts = Vec::with_capacity(layers.len() + 1);
        acts.push(features.to_vec());
        for (l, layer) in layers.iter().enumerate() {
            let input = &acts[l];
            let z: Vec<f64> = (0..layer.outputs)
                .map(|o| {
                    let dot: f64 = (0..layer.inputs).map(|i| layer.weight(&self.params, o, i) * input[i]).sum();
                    dot + self.params[layer.bias_offset() + o]
                })
                .collect();
            let a = if l + 1 == layers.len() {
                z.clone()
            } else {
                z.iter().map(|&v| self.activation.apply(v)).collect()
            };
            pre.push(z);
            acts.push(a);
        }
        Ok(Trace { pre, acts })
    }

    /// Raw outputs (regression value or class logits).
    pub fn output(&self, features: &[f64]) -> Result<Vec<f64>> {
        Ok(self.trace(features)?.acts.pop().expect("output layer"))
    }

    pub fn sample_loss(&self, sample: &Sample, loss: LossKind) -> Result<f64> {
        let out = self.output(&sample.features)?;
        Ok(loss_and_output_grad(&out, sample.target, loss)?.0)
    }

    /// Loss and full parameter gradient of one sample.
    pub fn sample_gradient(&self, sample: &Sample, loss: LossKind) -> Result<(f64, Vec<f64>)> {
        let mut grad = vec![0.0; self.params.len()];
        let l = self.accumulate_gradient(sample, loss, 1.0, &mut grad)?;
        Ok((l, grad))
    }

    /// Adds `scale * dloss/dparams` of one sample into `grad`; returns the sample loss.
    pub fn accumulate_gradient(&self, sample: &Sample, loss: LossKind, scale: f64, grad: &mut [f64]) -> Result<f64> {
        debug_assert_eq!(grad.len(), self.params.len());
        let trace = self.trace(&sample.features)?;
        let out = trace.acts.last().expect("output layer");
        let (value, mut delta) = loss_and_output_grad(out, sample.target, loss)?;
        let layers = self.layers();
        for (l, layer) in layers.iter().enumerate().rev() {
            let input = &trace.acts[l];
            for o in 0..layer.outputs {
                let d = scale * delta[o];
                if d == 0.0 {
                    continue;
                }
                let row = layer.offset + o * layer.inputs;
                for i in 0..layer.inputs {
                    grad[row + i] += d * input[i];
                }
                grad[layer.bias_offset() + o] += d;
            }
            if l > 0 {
                let below = &trace.pre[l - 1];
                let below_act = &trace.acts[l];
                delta = (0..layer.inputs)
                    .map(|i| {
                        let back: f64 = (0..layer.outputs).map(|o| layer.weight(&self.params, o, i) * delta[o]).sum();
                        back * self.activation.derivative(below[i], below_act[i])
                    })
                    .collect();
            }
        }
        Ok(value)
    }
}

/// Per-sample loss and its gradient with respect to the model outputs.
fn loss_and_output_grad(out: &[f64], target: Target, loss: LossKind) -> Result<(f64, Vec<f64>)> {
    match (loss, target) {
        (LossKind::MeanSquaredError, Target::Value(y)) => {
            if out.len() != 1 {
                return Err(Error::DimensionMismatch { expected: 1, got: out.len() });
            }
            let r = out[0] - y;
            Ok((0.5 * r * r, vec![r]))
        }
        (LossKind::CrossEntropy, Target::Class(c)) => {
            if c >= out.len() {
                return Err(Error::InvalidSample(format!("class {c} outside {} outputs", out.len())));
            }
            let max = out.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = out.iter().map(|z| (z - max).exp()).collect();
            let total: f64 = exps.iter().sum();
            let value = (max + total.ln() - out[c]).max(0.0);
            let mut grad: Vec<f64> = exps.iter().map(|e| e / total).collect();
            grad[c] -= 1.0;
            Ok((value, grad))
        }
        (LossKind::MeanSquaredError, Target::Class(_)) => {
            Err(Error::InvalidConfig("mean squared error needs regression targets".into()))
        }
        (LossKind::CrossEntropy, Target::Value(_)) => {
            Err(Error::InvalidConfig("cross-entropy needs class targets".into()))
        }
    }
}
