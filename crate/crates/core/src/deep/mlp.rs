use rand::Rng;
use serde::{Deserialize, Serialize};

use super::DeepError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    /// Negative slope 0.01.
    LeakyRelu,
}

impl Activation {
    const LEAK: f64 = 0.01;

    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::LeakyRelu => {
                if z > 0.0 {
                    z
                } else {
                    Self::LEAK * z
                }
            }
        }
    }

    fn derivative(self, z: f64) -> f64 {
        match (self, z > 0.0) {
            (_, true) => 1.0,
            (Activation::Relu, false) => 0.0,
            (Activation::LeakyRelu, false) => Self::LEAK,
        }
    }
}

/// Dense layer, `w` stored row-major as `outputs x inputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl Layer {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Layer { inputs, outputs, w: vec![0.0; inputs * outputs], b: vec![0.0; outputs] }
    }

    /// Uniform fan-in initialisation with limit `sqrt(gain / inputs)`; zero bias.
    fn init(inputs: usize, outputs: usize, gain: f64, rng: &mut impl Rng) -> Self {
        let limit = (gain / inputs as f64).sqrt();
        Layer {
            inputs,
            outputs,
            w: (0..inputs * outputs).map(|_| rng.gen_range(-limit..limit)).collect(),
            b: vec![0.0; outputs],
        }
    }

    /// `x` is `n x inputs`; returns `n x outputs` pre-activations.
    fn forward(&self, x: &[f64], n: usize) -> Vec<f64> {
        let mut z = vec![0.0; n * self.outputs];
        for r in 0..n {
            let xr = &x[r * self.inputs..(r + 1) * self.inputs];
            let zr = &mut z[r * self.outputs..(r + 1) * self.outputs];
            for (o, zo) in zr.iter_mut().enumerate() {
                let wo = &self.w[o * self.inputs..(o + 1) * self.inputs];
                *zo = self.b[o] + wo.iter().zip(xr).map(|(a, b)| a * b).sum::<f64>();
            }
        }
        z
    }
}

/// Shared-weight per-channel regressor: hidden layers with the chosen
/// activation and a single linear output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub activation: Activation,
    pub layers: Vec<Layer>,
    /// Fixed factor applied to the linear output.
    #[serde(default = "unit")]
    pub output_scale: f64,
}

fn unit() -> f64 {
    1.0
}

/// Parameter-shaped gradient buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Layer>,
}

impl Gradients {
    pub fn zeros_like(m: &Mlp) -> Self {
        Gradients { layers: m.layers.iter().map(|l| Layer::zeros(l.inputs, l.outputs)).collect() }
    }

    pub fn flat(&self) -> Vec<f64> {
        self.layers.iter().flat_map(|l| l.w.iter().chain(&l.b).copied()).collect()
    }
}

/// Activations kept for the backward pass.
pub struct ForwardCache {
    n: usize,
    /// `inputs[l]` feeds layer `l`; the last entry is the network output.
    inputs: Vec<Vec<f64>>,
    /// Pre-activations of the hidden layers.
    pre: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.inputs.last().map(|v| v.as_slice()).unwrap_or(&[])
    }
}

impl Mlp {
    pub fn new(n_inputs: usize, hidden: &[usize], activation: Activation, rng: &mut impl Rng) -> Result<Self, DeepError> {
        if n_inputs == 0 || hidden.is_empty() || hidden.contains(&0) {
            return Err(DeepError::Spec("network needs inputs and >= 1 hidden layer of width >= 1".into()));
        }
        let mut layers = Vec::with_capacity(hidden.len() + 1);
        let mut fan_in = n_inputs;
        for &h in hidden {
            layers.push(Layer::init(fan_in, h, 6.0, rng));
            fan_in = h;
        }
        layers.push(Layer::init(fan_in, 1, 3.0, rng));
        Ok(Mlp { activation, layers, output_scale: 1.0 })
    }

    pub fn n_inputs(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    pub fn params_flat(&self) -> Vec<f64> {
        self.layers.iter().flat_map(|l| l.w.iter().chain(&l.b).copied()).collect()
    }

    pub fn set_params_flat(&mut self, p: &[f64]) {
        let mut it = p.iter().copied();
        for l in &mut self.layers {
            for x in l.w.iter_mut().chain(l.b.iter_mut()) {
                *x = it.next().expect("parameter vector too short");
            }
        }
    }

    /// One output per input row (`x` is `n x n_inputs`).
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, DeepError> {
        Ok(self.forward_cached(x)?.inputs.pop().unwrap_or_default())
    }

    pub fn forward_cached(&self, x: &[f64]) -> Result<ForwardCache, DeepError> {
        let d = self.n_inputs();
        if x.len() % d != 0 {
            return Err(DeepError::Shape { expected: d, got: x.len() });
        }
        let n = x.len() / d;
        let mut inputs = vec![x.to_vec()];
        let mut pre = Vec::with_capacity(self.layers.len() - 1);
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = layer.forward(inputs.last().unwrap(), n);
            if i == last {
                z.iter_mut().for_each(|v| *v *= self.output_scale);
                inputs.push(z);
            } else {
                inputs.push(z.iter().map(|&v| self.activation.apply(v)).collect());
                pre.push(z);
            }
        }
        Ok(ForwardCache { n, inputs, pre })
    }

    /// Accumulates into `grads` the gradient of `sum_r dout[r] * y[r]`.
    pub fn backward(&self, cache: &ForwardCache, dout: &[f64], grads: &mut Gradients) {
        let n = cache.n;
        let mut delta: Vec<f64> = dout.iter().map(|d| d * self.output_scale).collect();
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let g = &mut grads.layers[l];
            let x = &cache.inputs[l];
            for r in 0..n {
                let xr = &x[r * layer.inputs..(r + 1) * layer.inputs];
                for o in 0..layer.outputs {
                    let d = delta[r * layer.outputs + o];
                    if d == 0.0 {
                        continue;
                    }
                    g.b[o] += d;
                    let gw = &mut g.w[o * layer.inputs..(o + 1) * layer.inputs];
                    for (gwi, &xi) in gw.iter_mut().zip(xr) {
                        *gwi += d * xi;
                    }
                }
            }
            if l == 0 {
                break;
            }
            let z = &cache.pre[l - 1];
            let mut prev = vec![0.0; n * layer.inputs];
            for r in 0..n {
                let pr = &mut prev[r * layer.inputs..(r + 1) * layer.inputs];
                for o in 0..layer.outputs {
                    let d = delta[r * layer.outputs + o];
                    if d == 0.0 {
                        continue;
                    }
                    let wo = &layer.w[o * layer.inputs..(o + 1) * layer.inputs];
                    for (p, &w) in pr.iter_mut().zip(wo) {
                        *p += d * w;
                    }
                }
                for (i, p) in pr.iter_mut().enumerate() {
                    *p *= self.activation.derivative(z[r * layer.inputs + i]);
                }
            }
            delta = prev;
        }
    }
}

/// Adam with bias-corrected moments and L2 weight decay added to the gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: i32,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(n_params: usize, lr: f64, weight_decay: f64) -> Self {
        Adam { lr, weight_decay, beta1: 0.9, beta2: 0.999, eps: 1e-8, t: 0, m: vec![0.0; n_params], v: vec![0.0; n_params] }
    }

    pub fn step(&mut self, mlp: &mut Mlp, grads: &Gradients) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        let mut i = 0;
        for (layer, g) in mlp.layers.iter_mut().zip(&grads.layers) {
            for (p, &gp) in layer.w.iter_mut().chain(layer.b.iter_mut()).zip(g.w.iter().chain(&g.b)) {
                let gi = gp + self.weight_decay * *p;
                self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * gi;
                self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * gi * gi;
                *p -= self.lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + self.eps);
                i += 1;
            }
        }
    }
}
