//! Small fully connected classifier `r_theta(y | z)`: dense layers with a
//! smooth nonlinearity and a log-softmax head, with hand-written reverse-mode
//! gradients.
//!
//! Parameters live in one flat vector. Layer `l` maps `d_l -> d_{l+1}` and
//! occupies `d_{l+1} * d_l` weights (row-major, one row per output unit)
//! followed by `d_{l+1}` biases.

pub mod checkpoint;
pub mod optim;

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

pub use optim::{Optimizer, OptimizerKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Tanh,
    Relu,
}

impl Activation {
    fn apply(self, v: f64) -> f64 {
        match self {
            Activation::Tanh => v.tanh(),
            Activation::Relu => v.max(0.0),
        }
    }

    /// Derivative expressed through the activation's output.
    fn derivative_from_output(self, out: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - out * out,
            Activation::Relu => {
                if out > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Relu => "relu",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "tanh" => Some(Activation::Tanh),
            "relu" => Some(Activation::Relu),
            _ => None,
        }
    }
}

/// Gradient with the same flat layout as [`ClassifierNet::params`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradientVector(pub Vec<f64>);

impl GradientVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierNet {
    layer_dims: Vec<usize>,
    activation: Activation,
    params: Vec<f64>,
}

fn param_count(dims: &[usize]) -> usize {
    dims.windows(2).map(|w| w[1] * w[0] + w[1]).sum()
}

fn check_dims(dims: &[usize]) -> Result<()> {
    if dims.len() < 2 || dims.contains(&0) {
        return Err(Error::Validation(format!("layer dims must have >= 2 positive entries, got {dims:?}")));
    }
    Ok(())
}

impl ClassifierNet {
    /// Seeded Glorot-uniform weights, zero biases.
    pub fn new(layer_dims: Vec<usize>, activation: Activation, seed: u64) -> Result<Self> {
        check_dims(&layer_dims)?;
        let mut rng = seed::stream(seed);
        let mut params = Vec::with_capacity(param_count(&layer_dims));
        for w in layer_dims.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            params.extend((0..fan_in * fan_out).map(|_| rng.random_range(-bound..bound)));
            params.extend(std::iter::repeat_n(0.0, fan_out));
        }
        Ok(Self { layer_dims, activation, params })
    }

    pub fn zeros(layer_dims: Vec<usize>, activation: Activation) -> Result<Self> {
        check_dims(&layer_dims)?;
        let params = vec![0.0; param_count(&layer_dims)];
        Ok(Self { layer_dims, activation, params })
    }

    pub fn from_params(layer_dims: Vec<usize>, activation: Activation, params: Vec<f64>) -> Result<Self> {
        check_dims(&layer_dims)?;
        let expected = param_count(&layer_dims);
        if params.len() != expected {
            return Err(Error::Dimension { context: "parameter vector", expected, actual: params.len() });
        }
        Ok(Self { layer_dims, activation, params })
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_dims.last().expect("at least two layer dims")
    }

    fn n_layers(&self) -> usize {
        self.layer_dims.len() - 1
    }

    fn offsets(&self) -> Vec<usize> {
        let mut out = vec![0];
        for w in self.layer_dims.windows(2) {
            out.push(out.last().unwrap() + w[1] * w[0] + w[1]);
        }
        out
    }

    fn layer(&self, l: usize, offset: usize) -> (ArrayView2<'_, f64>, ArrayView1<'_, f64>) {
        let (fan_in, fan_out) = (self.layer_dims[l], self.layer_dims[l + 1]);
        let w = ArrayView2::from_shape((fan_out, fan_in), &self.params[offset..offset + fan_out * fan_in]).expect("layout");
        let b_start = offset + fan_out * fan_in;
        let b = ArrayView1::from(&self.params[b_start..b_start + fan_out]);
        (w, b)
    }

    /// Row-wise log-probabilities for a batch of `m` inputs.
    pub fn forward_logprob(&self, z_batch: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        Ok(self.forward(z_batch)?.logprob)
    }

    /// Forward pass keeping the activations that [`ClassifierNet::backward_from`] needs.
    pub fn forward(&self, z_batch: ArrayView2<'_, f64>) -> Result<ForwardPass> {
        if z_batch.ncols() != self.input_dim() {
            return Err(Error::Dimension { context: "network input", expected: self.input_dim(), actual: z_batch.ncols() });
        }
        let offsets = self.offsets();
        let mut hidden = Vec::with_capacity(self.n_layers() - 1);
        let mut current = z_batch.to_owned();
        for (l, &offset) in offsets.iter().enumerate().take(self.n_layers()) {
            let (w, b) = self.layer(l, offset);
            let mut pre = current.dot(&w.t());
            pre += &b;
            if l + 1 < self.n_layers() {
                pre.mapv_inplace(|v| self.activation.apply(v));
                hidden.push(pre.clone());
                current = pre;
            } else {
                log_softmax_rows(&mut pre);
                current = pre;
            }
        }
        Ok(ForwardPass { input: z_batch.to_owned(), hidden, logprob: current })
    }

    /// Gradient of `sum(upstream * logprob)` with respect to every parameter.
    pub fn backward_from(&self, pass: &ForwardPass, upstream: ArrayView2<'_, f64>) -> Result<GradientVector> {
        if upstream.dim() != pass.logprob.dim() {
            return Err(Error::Dimension { context: "upstream gradient rows x cols", expected: pass.logprob.len(), actual: upstream.len() });
        }
        if let Some(bad) = upstream.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("upstream gradient contains {bad}")));
        }
        let offsets = self.offsets();
        let mut grad = vec![0.0; self.params.len()];

        // d/d(logits) of sum(u * log_softmax) = u - softmax * rowsum(u)
        let row_totals = upstream.sum_axis(Axis(1));
        let mut delta = upstream.to_owned();
        for ((mut d, lp), total) in delta.axis_iter_mut(Axis(0)).zip(pass.logprob.axis_iter(Axis(0))).zip(row_totals.iter()) {
            for (dv, &l) in d.iter_mut().zip(lp.iter()) {
                *dv -= l.exp() * total;
            }
        }

        for l in (0..self.n_layers()).rev() {
            let (w, _) = self.layer(l, offsets[l]);
            let below = if l == 0 { &pass.input } else { &pass.hidden[l - 1] };
            let gw = delta.t().dot(below);
            let gb = delta.sum_axis(Axis(0));
            let (fan_in, fan_out) = (self.layer_dims[l], self.layer_dims[l + 1]);
            let start = offsets[l];
            // iter() walks row-major whatever the memory layout of the product
            for (dst, &v) in grad[start..start + fan_out * fan_in + fan_out].iter_mut().zip(gw.iter().chain(gb.iter())) {
                *dst = v;
            }
            if l > 0 {
                let mut next = delta.dot(&w);
                next.zip_mut_with(below, |g, &h| *g *= self.activation.derivative_from_output(h));
                delta = next;
            }
        }
        Ok(GradientVector(grad))
    }

    /// Clamps every parameter to `[-bound, bound]`.
    pub fn clip(&mut self, bound: f64) {
        for p in &mut self.params {
            *p = p.clamp(-bound, bound);
        }
    }
}

/// Activations retained from a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    input: Array2<f64>,
    hidden: Vec<Array2<f64>>,
    logprob: Array2<f64>,
}

impl ForwardPass {
    pub fn logprob(&self) -> &Array2<f64> {
        &self.logprob
    }
}

/// Reverse-mode gradient of `sum(upstream * forward_logprob(z_batch))`.
pub fn backward(net: &ClassifierNet, z_batch: ArrayView2<'_, f64>, upstream: ArrayView2<'_, f64>) -> Result<GradientVector> {
    let pass = net.forward(z_batch)?;
    net.backward_from(&pass, upstream)
}

fn log_softmax_rows(logits: &mut Array2<f64>) {
    for mut row in logits.axis_iter_mut(Axis(0)) {
        let top = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = top + row.iter().map(|&v| (v - top).exp()).sum::<f64>().ln();
        row.mapv_inplace(|v| v - lse);
    }
}
