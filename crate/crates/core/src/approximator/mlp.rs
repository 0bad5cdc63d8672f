//! Fully connected tanh network with a linear output layer and hand-written
//! reverse mode.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Init {
    /// Uniform Glorot initialization of the weights, zero biases.
    Xavier { seed: u64 },
    /// All parameters zero: every head emits the uniform distribution.
    Zeros,
}

/// Layer widths plus one flat parameter vector. Layer `l` stores its weight
/// matrix (`out x in`, row-major) followed by its bias.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpParams {
    sizes: Vec<usize>,
    params: Vec<f64>,
}

/// Activations kept from a forward pass for the backward pass.
#[derive(Clone, Debug)]
pub(crate) struct MlpCache {
    /// `acts[0]` is the input, `acts[l]` the output of hidden layer `l`.
    acts: Vec<Vec<f64>>,
}

impl MlpParams {
    pub fn new(input: usize, hidden: &[usize], output: usize, init: Init) -> Result<Self> {
        let mut sizes = vec![input];
        sizes.extend_from_slice(hidden);
        sizes.push(output);
        if sizes.contains(&0) {
            return Err(Error::invalid(format!("layer widths must be positive, got {sizes:?}")));
        }
        let count = param_count(&sizes);
        let mut params = vec![0.0; count];
        if let Init::Xavier { seed } = init {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let mut off = 0;
            for w in sizes.windows(2) {
                let (fan_in, fan_out) = (w[0], w[1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                for p in &mut params[off..off + fan_in * fan_out] {
                    *p = rng.random_range(-limit..limit);
                }
                off += fan_in * fan_out + fan_out;
            }
        }
        Ok(MlpParams { sizes, params })
    }

    pub fn from_flat(sizes: Vec<usize>, params: Vec<f64>) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::invalid(format!("bad layer widths {sizes:?}")));
        }
        if param_count(&sizes) != params.len() {
            return Err(Error::dim(format!(
                "layer widths {sizes:?} need {} parameters, got {}",
                param_count(&sizes),
                params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Numeric("non-finite network parameter".into()));
        }
        Ok(MlpParams { sizes, params })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().expect("at least two layers")
    }

    pub fn hidden(&self) -> &[usize] {
        &self.sizes[1..self.sizes.len() - 1]
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.params
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// `params -= lr * grad`.
    pub fn step(&mut self, grad: &[f64], lr: f64) {
        for (p, g) in self.params.iter_mut().zip(grad) {
            *p -= lr * g;
        }
    }

    pub(crate) fn forward(&self, input: &[f64]) -> (Vec<f64>, MlpCache) {
        debug_assert_eq!(input.len(), self.input_dim());
        let layers = self.sizes.len() - 1;
        let mut acts = Vec::with_capacity(layers);
        let mut x = input.to_vec();
        let mut off = 0;
        for l in 0..layers {
            let (fan_in, fan_out) = (self.sizes[l], self.sizes[l + 1]);
            let w = &self.params[off..off + fan_in * fan_out];
            let b = &self.params[off + fan_in * fan_out..off + fan_in * fan_out + fan_out];
            off += fan_in * fan_out + fan_out;
            let mut y: Vec<f64> = w
                .chunks_exact(fan_in)
                .zip(b)
                .map(|(row, bias)| bias + row.iter().zip(&x).map(|(a, c)| a * c).sum::<f64>())
                .collect();
            if l + 1 < layers {
                y.iter_mut().for_each(|v| *v = v.tanh());
            }
            acts.push(x);
            x = y;
        }
        (x, MlpCache { acts })
    }

    /// Adds the gradient of `dout · output` with respect to the parameters into `grad`.
    pub(crate) fn backward(&self, cache: &MlpCache, dout: &[f64], grad: &mut [f64]) {
        let layers = self.sizes.len() - 1;
        let mut offsets = Vec::with_capacity(layers);
        let mut off = 0;
        for l in 0..layers {
            offsets.push(off);
            off += self.sizes[l] * self.sizes[l + 1] + self.sizes[l + 1];
        }
        let mut delta = dout.to_vec();
        for l in (0..layers).rev() {
            let (fan_in, fan_out) = (self.sizes[l], self.sizes[l + 1]);
            let off = offsets[l];
            let x = &cache.acts[l];
            {
                let (gw, gb) = grad[off..off + fan_in * fan_out + fan_out].split_at_mut(fan_in * fan_out);
                for (o, &d) in delta.iter().enumerate() {
                    if d != 0.0 {
                        for (g, &xi) in gw[o * fan_in..(o + 1) * fan_in].iter_mut().zip(x) {
                            *g += d * xi;
                        }
                        gb[o] += d;
                    }
                }
            }
            if l == 0 {
                break;
            }
            let w = &self.params[off..off + fan_in * fan_out];
            let mut prev = vec![0.0; fan_in];
            for (o, &d) in delta.iter().enumerate() {
                if d != 0.0 {
                    for (p, &wv) in prev.iter_mut().zip(&w[o * fan_in..(o + 1) * fan_in]) {
                        *p += d * wv;
                    }
                }
            }
            // x = tanh(pre), so dpre = dx * (1 - x^2).
            for (p, &xi) in prev.iter_mut().zip(x) {
                *p *= 1.0 - xi * xi;
            }
            delta = prev;
        }
    }
}

fn param_count(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

/// Numerically stable softmax.
pub(crate) fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Pulls `dL/dy` back through `y = softmax(z)`.
pub(crate) fn softmax_backward(y: &[f64], dy: &[f64]) -> Vec<f64> {
    let inner: f64 = y.iter().zip(dy).map(|(a, b)| a * b).sum();
    y.iter().zip(dy).map(|(yi, gi)| yi * (gi - inner)).collect()
}
