//! Fully connected value network with a flat parameter vector.
//!
//! Layer `l` stores its weights row-major (`fan_out × fan_in`) followed by
//! its biases. Hidden layers use ReLU, the output layer is affine. Training
//! only ever needs the output row of the chosen action, so the backward pass
//! touches `O(hidden)` output parameters per sample instead of `O(K·hidden)`.

use std::ops::Range;

use rand::Rng;
use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetworkError {
    #[error("network needs at least an input and an output layer, all non-empty")]
    InvalidDims,
    #[error("input has length {got}, expected {expected}")]
    InputDim { expected: usize, got: usize },
    #[error("action {action} outside output width {width}")]
    ActionOutOfRange { action: usize, width: usize },
    #[error("malformed parameter snapshot")]
    BadSnapshot,
    #[error("parameters must be finite")]
    NotFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Layer {
    fan_in: usize,
    fan_out: usize,
    weights: usize,
    biases: usize,
}

impl Layer {
    fn row(&self, r: usize) -> Range<usize> {
        self.weights + r * self.fan_in..self.weights + (r + 1) * self.fan_in
    }
}

/// Reusable activation buffers for forward/backward passes.
#[derive(Debug, Clone, Default)]
pub struct Scratch<T> {
    /// `acts[0]` is the input, `acts[l]` the post-ReLU output of hidden layer `l`.
    acts: Vec<Vec<T>>,
    delta: Vec<T>,
    delta_prev: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<T> {
    dims: Vec<usize>,
    layers: Vec<Layer>,
    params: Vec<T>,
}

fn layout(dims: &[usize]) -> Result<(Vec<Layer>, usize), NetworkError> {
    if dims.len() < 2 || dims.contains(&0) {
        return Err(NetworkError::InvalidDims);
    }
    let mut offset = 0;
    let layers = dims
        .windows(2)
        .map(|w| {
            let layer = Layer {
                fan_in: w[0],
                fan_out: w[1],
                weights: offset,
                biases: offset + w[0] * w[1],
            };
            offset += w[0] * w[1] + w[1];
            layer
        })
        .collect();
    Ok((layers, offset))
}

impl<T: Real> Mlp<T> {
    /// All parameters zero.
    pub fn zeros(dims: &[usize]) -> Result<Self, NetworkError> {
        let (layers, n) = layout(dims)?;
        Ok(Self {
            dims: dims.to_vec(),
            layers,
            params: vec![T::zero(); n],
        })
    }

    /// Weights and biases uniform in `±1/√fan_in`.
    pub fn init<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> Result<Self, NetworkError> {
        let mut net = Self::zeros(dims)?;
        for layer in net.layers.clone() {
            let bound = 1.0 / (layer.fan_in as f64).sqrt();
            let end = layer.biases + layer.fan_out;
            for p in &mut net.params[layer.weights..end] {
                *p = T::of(rng.gen_range(-bound..=bound));
            }
        }
        Ok(net)
    }

    pub fn from_params(dims: &[usize], params: Vec<T>) -> Result<Self, NetworkError> {
        let mut net = Self::zeros(dims)?;
        if params.len() != net.params.len() {
            return Err(NetworkError::BadSnapshot);
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(NetworkError::NotFinite);
        }
        net.params = params;
        Ok(net)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().expect("at least two layers")
    }

    pub fn params(&self) -> &[T] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [T] {
        &mut self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    /// Every parameter except the output layer.
    pub fn hidden_span(&self) -> Range<usize> {
        0..self.output_layer().weights
    }

    /// Output weights of row `action` plus the index of its bias.
    pub fn output_row_span(&self, action: usize) -> (Range<usize>, usize) {
        let out = self.output_layer();
        (out.row(action), out.biases + action)
    }

    fn output_layer(&self) -> &Layer {
        self.layers.last().expect("at least one layer")
    }

    fn check_input(&self, obs: &[T]) -> Result<(), NetworkError> {
        if obs.len() == self.input_dim() {
            Ok(())
        } else {
            Err(NetworkError::InputDim {
                expected: self.input_dim(),
                got: obs.len(),
            })
        }
    }

    fn check_action(&self, action: usize) -> Result<(), NetworkError> {
        if action < self.output_dim() {
            Ok(())
        } else {
            Err(NetworkError::ActionOutOfRange {
                action,
                width: self.output_dim(),
            })
        }
    }

    /// Runs the hidden stack; the last hidden activation ends up in
    /// `scratch.acts.last()`.
    fn hidden_pass(&self, obs: &[T], scratch: &mut Scratch<T>) {
        let hidden = &self.layers[..self.layers.len() - 1];
        scratch.acts.resize_with(self.layers.len(), Vec::new);
        scratch.acts[0].clear();
        scratch.acts[0].extend_from_slice(obs);
        for (l, layer) in hidden.iter().enumerate() {
            let (done, rest) = scratch.acts.split_at_mut(l + 1);
            let input = &done[l];
            let out = &mut rest[0];
            out.clear();
            for r in 0..layer.fan_out {
                let z = dot(&self.params[layer.row(r)], input) + self.params[layer.biases + r];
                out.push(z.max(T::zero()));
            }
        }
    }

    fn output_row(&self, action: usize, h: &[T]) -> T {
        let out = self.output_layer();
        dot(&self.params[out.row(action)], h) + self.params[out.biases + action]
    }

    /// All `K` outputs.
    pub fn forward(&self, obs: &[T]) -> Result<Vec<T>, NetworkError> {
        let mut out = Vec::new();
        self.forward_into(obs, &mut Scratch::default(), &mut out)?;
        Ok(out)
    }

    pub fn forward_into(
        &self,
        obs: &[T],
        scratch: &mut Scratch<T>,
        out: &mut Vec<T>,
    ) -> Result<(), NetworkError> {
        self.check_input(obs)?;
        self.hidden_pass(obs, scratch);
        let h = scratch.acts.last().expect("input slot exists");
        out.clear();
        out.extend((0..self.output_dim()).map(|a| self.output_row(a, h)));
        Ok(())
    }

    /// Output `action` only.
    pub fn output(
        &self,
        obs: &[T],
        action: usize,
        scratch: &mut Scratch<T>,
    ) -> Result<T, NetworkError> {
        self.check_input(obs)?;
        self.check_action(action)?;
        self.hidden_pass(obs, scratch);
        Ok(self.output_row(action, scratch.acts.last().expect("input slot exists")))
    }

    /// Largest output and its lowest index.
    pub fn max_output(
        &self,
        obs: &[T],
        scratch: &mut Scratch<T>,
    ) -> Result<(usize, T), NetworkError> {
        self.check_input(obs)?;
        self.hidden_pass(obs, scratch);
        let h = scratch.acts.last().expect("input slot exists");
        let mut best = (0, self.output_row(0, h));
        for a in 1..self.output_dim() {
            let q = self.output_row(a, h);
            if q > best.1 {
                best = (a, q);
            }
        }
        Ok(best)
    }

    /// Adds `scale · ∂(Q(obs)[action] − target)² / ∂θ` into `grad` and
    /// returns the squared error.
    pub fn accumulate_gradient(
        &self,
        obs: &[T],
        action: usize,
        target: T,
        scale: T,
        scratch: &mut Scratch<T>,
        grad: &mut [T],
    ) -> Result<T, NetworkError> {
        self.accumulate_group_gradient(obs, &[(action, target)], scale, scratch, grad)
    }

    /// Same as [`accumulate_gradient`](Self::accumulate_gradient) summed over
    /// several `(action, target)` pairs that share one observation. The
    /// hidden activations are computed once and the error signals reaching
    /// the hidden stack are summed before backpropagating, which is exact
    /// because every sample sees the same ReLU pattern. Returns the summed
    /// squared error.
    pub fn accumulate_group_gradient(
        &self,
        obs: &[T],
        samples: &[(usize, T)],
        scale: T,
        scratch: &mut Scratch<T>,
        grad: &mut [T],
    ) -> Result<T, NetworkError> {
        self.check_input(obs)?;
        for &(a, _) in samples {
            self.check_action(a)?;
        }
        if grad.len() != self.params.len() {
            return Err(NetworkError::BadSnapshot);
        }
        self.hidden_pass(obs, scratch);
        let n = self.layers.len();
        let out = *self.output_layer();
        scratch.delta.clear();
        scratch.delta.resize(out.fan_in, T::zero());
        let mut sq = T::zero();
        for &(action, target) in samples {
            let err = self.output_row(action, &scratch.acts[n - 1]) - target;
            sq += err * err;
            let d = T::of(2.0) * err * scale;
            let row = out.row(action);
            for (g, &h) in grad[row.clone()].iter_mut().zip(&scratch.acts[n - 1]) {
                *g += d * h;
            }
            grad[out.biases + action] += d;
            for (dh, &w) in scratch.delta.iter_mut().zip(&self.params[row]) {
                *dh += d * w;
            }
        }

        for l in (0..n - 1).rev() {
            let layer = self.layers[l];
            // ReLU derivative: the post-activation is positive iff z > 0.
            for (dz, &a) in scratch.delta.iter_mut().zip(&scratch.acts[l + 1]) {
                if a <= T::zero() {
                    *dz = T::zero();
                }
            }
            let input = &scratch.acts[l];
            for r in 0..layer.fan_out {
                let dz = scratch.delta[r];
                if dz == T::zero() {
                    continue;
                }
                for (g, &x) in grad[layer.row(r)].iter_mut().zip(input) {
                    *g += dz * x;
                }
                grad[layer.biases + r] += dz;
            }
            if l > 0 {
                scratch.delta_prev.clear();
                scratch.delta_prev.resize(layer.fan_in, T::zero());
                for r in 0..layer.fan_out {
                    let dz = scratch.delta[r];
                    if dz == T::zero() {
                        continue;
                    }
                    for (dp, &w) in scratch
                        .delta_prev
                        .iter_mut()
                        .zip(&self.params[layer.row(r)])
                    {
                        *dp += dz * w;
                    }
                }
                std::mem::swap(&mut scratch.delta, &mut scratch.delta_prev);
            }
        }
        Ok(sq)
    }

    /// `[layers+1, dims…, params…]`.
    pub fn snapshot(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(1 + self.dims.len() + self.params.len());
        out.push(T::of_usize(self.dims.len()));
        out.extend(self.dims.iter().map(|&d| T::of_usize(d)));
        out.extend_from_slice(&self.params);
        out
    }

    pub fn restore(snapshot: &[T]) -> Result<Self, NetworkError> {
        let count = snapshot
            .first()
            .and_then(|c| header_value(*c))
            .ok_or(NetworkError::BadSnapshot)?;
        if snapshot.len() < 1 + count {
            return Err(NetworkError::BadSnapshot);
        }
        let dims = snapshot[1..=count]
            .iter()
            .map(|&d| header_value(d))
            .collect::<Option<Vec<_>>>()
            .ok_or(NetworkError::BadSnapshot)?;
        Self::from_params(&dims, snapshot[1 + count..].to_vec())
    }
}

fn header_value<T: Real>(x: T) -> Option<usize> {
    let v = x.as_f64();
    (v.is_finite() && v >= 0.0 && v.fract() == 0.0).then_some(v as usize)
}

/// Dot product with four independent accumulators so the loop vectorises.
#[inline]
fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [T::zero(); 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let tail = ca
        .remainder()
        .iter()
        .zip(cb.remainder())
        .fold(T::zero(), |s, (&x, &y)| s + x * y);
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}
