//! A small fully connected Q-value approximator with hand-written
//! backpropagation.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write as _;

use rand::Rng;

use super::AgentError;
use crate::env::Transition;

/// One affine layer, weights stored row-major as `[outputs][inputs]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Dense {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            biases: vec![0.0; outputs],
        }
    }

    fn apply(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for (row, b) in self.weights.chunks_exact(self.inputs).zip(&self.biases) {
            out.push(b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>());
        }
    }
}

/// Feedforward network: rectifier on hidden layers, identity on the output.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueNetwork {
    layers: Vec<Dense>,
}

fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

impl ValueNetwork {
    /// All-zero parameters.
    pub fn zeros(sizes: &[usize]) -> Result<Self, AgentError> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(AgentError::ArchitectureMismatch);
        }
        Ok(Self {
            layers: sizes.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect(),
        })
    }

    /// He-uniform weights, zero biases.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Result<Self, AgentError> {
        let mut net = Self::zeros(sizes)?;
        for layer in &mut net.layers {
            let bound = libm::sqrt(6.0 / layer.inputs as f64);
            for w in &mut layer.weights {
                *w = rng.gen_range(-bound..bound);
            }
        }
        Ok(net)
    }

    pub fn from_layers(layers: Vec<Dense>) -> Result<Self, AgentError> {
        let ok = !layers.is_empty()
            && layers.iter().all(|l| {
                l.inputs > 0 && l.outputs > 0 && l.weights.len() == l.inputs * l.outputs && l.biases.len() == l.outputs
            })
            && layers.windows(2).all(|w| w[0].outputs == w[1].inputs);
        if !ok {
            return Err(AgentError::ArchitectureMismatch);
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.layers[0].inputs];
        s.extend(self.layers.iter().map(|l| l.outputs));
        s
    }

    pub fn input_len(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_len(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    /// Parameters flattened layer by layer, weights then biases.
    pub fn params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            p.extend_from_slice(&l.weights);
            p.extend_from_slice(&l.biases);
        }
        p
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<(), AgentError> {
        if params.len() != self.param_count() {
            return Err(AgentError::DimensionMismatch {
                expected: self.param_count(),
                got: params.len(),
            });
        }
        let mut rest = params;
        for l in &mut self.layers {
            let (w, r) = rest.split_at(l.weights.len());
            l.weights.copy_from_slice(w);
            let (b, r) = r.split_at(l.biases.len());
            l.biases.copy_from_slice(b);
            rest = r;
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.biases).all(|v| v.is_finite()))
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>, AgentError> {
        if input.len() != self.input_len() {
            return Err(AgentError::DimensionMismatch {
                expected: self.input_len(),
                got: input.len(),
            });
        }
        let mut x = input.to_vec();
        let mut z = Vec::new();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            layer.apply(&x, &mut z);
            if i != last {
                z.iter_mut().for_each(|v| *v = relu(*v));
            }
            core::mem::swap(&mut x, &mut z);
        }
        Ok(x)
    }

    /// Pre-activations per layer, for backpropagation. Entry 0 is the input.
    fn forward_trace(&self, input: &[f64]) -> Vec<Vec<f64>> {
        let mut trace = Vec::with_capacity(self.layers.len() + 1);
        trace.push(input.to_vec());
        let mut act = input.to_vec();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = Vec::new();
            layer.apply(&act, &mut z);
            act = if i != last { z.iter().map(|&v| relu(v)).collect() } else { z.clone() };
            trace.push(z);
        }
        trace
    }

    /// Mean squared TD error over the batch and its gradient. Only the
    /// taken action's output enters the loss for each sample.
    pub fn loss_and_gradient(&self, batch: &[Transition], targets: &[f64]) -> Result<(f64, Gradient), AgentError> {
        if batch.is_empty() {
            return Err(AgentError::EmptyBatch);
        }
        if batch.len() != targets.len() {
            return Err(AgentError::DimensionMismatch {
                expected: batch.len(),
                got: targets.len(),
            });
        }
        let scale = 1.0 / batch.len() as f64;
        let mut grad = Gradient::zeros_like(self);
        let mut loss = 0.0;
        for (t, &y) in batch.iter().zip(targets) {
            if t.state.len() != self.input_len() {
                return Err(AgentError::DimensionMismatch {
                    expected: self.input_len(),
                    got: t.state.len(),
                });
            }
            if t.action >= self.output_len() {
                return Err(AgentError::DimensionMismatch {
                    expected: self.output_len(),
                    got: t.action + 1,
                });
            }
            let trace = self.forward_trace(&t.state);
            let q = trace[self.layers.len()][t.action];
            let err = q - y;
            loss += err * err * scale;

            let mut delta = vec![0.0; self.output_len()];
            delta[t.action] = 2.0 * err * scale;
            for l in (0..self.layers.len()).rev() {
                let layer = &self.layers[l];
                let input: Vec<f64> = if l == 0 {
                    trace[0].clone()
                } else {
                    trace[l].iter().map(|&v| relu(v)).collect()
                };
                let g = &mut grad.layers[l];
                for (o, &d) in delta.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    g.biases[o] += d;
                    let row = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    for (gw, &x) in row.iter_mut().zip(&input) {
                        *gw += d * x;
                    }
                }
                if l > 0 {
                    let mut prev = vec![0.0; layer.inputs];
                    for (o, &d) in delta.iter().enumerate() {
                        if d == 0.0 {
                            continue;
                        }
                        let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                        for (p, &w) in prev.iter_mut().zip(row) {
                            *p += w * d;
                        }
                    }
                    for (p, &z) in prev.iter_mut().zip(&trace[l]) {
                        if z <= 0.0 {
                            *p = 0.0;
                        }
                    }
                    delta = prev;
                }
            }
        }
        Ok((loss, grad))
    }

    /// Mean squared TD loss without the gradient.
    pub fn loss(&self, batch: &[Transition], targets: &[f64]) -> Result<f64, AgentError> {
        let scale = 1.0 / batch.len() as f64;
        let mut loss = 0.0;
        for (t, &y) in batch.iter().zip(targets) {
            let q = self.forward(&t.state)?[t.action];
            loss += (q - y) * (q - y) * scale;
        }
        Ok(loss)
    }

    fn apply_gradient(&mut self, grad: &Gradient, learning_rate: f64) {
        for (l, g) in self.layers.iter_mut().zip(&grad.layers) {
            for (w, gw) in l.weights.iter_mut().zip(&g.weights) {
                *w -= learning_rate * gw;
            }
            for (b, gb) in l.biases.iter_mut().zip(&g.biases) {
                *b -= learning_rate * gb;
            }
        }
    }

    /// Writes the versioned text format: a header, the layer sizes, then
    /// each layer's weight rows and bias row as decimal text.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("rlsched-value-network v1\n");
        out.push_str("layers");
        for s in self.sizes() {
            let _ = write!(out, " {s}");
        }
        out.push('\n');
        for (i, l) in self.layers.iter().enumerate() {
            let _ = writeln!(out, "weights {i} {} {}", l.outputs, l.inputs);
            for row in l.weights.chunks_exact(l.inputs) {
                push_row(&mut out, row);
            }
            let _ = writeln!(out, "biases {i} {}", l.outputs);
            push_row(&mut out, &l.biases);
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, AgentError> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        let mut next = || lines.next().ok_or(AgentError::Parse { line: 0, reason: "unexpected end of file" });
        let (n, header) = next()?;
        if header != "rlsched-value-network v1" {
            return Err(AgentError::Parse { line: n, reason: "unknown header" });
        }
        let (n, sizes_line) = next()?;
        let mut parts = sizes_line.split_whitespace();
        if parts.next() != Some("layers") {
            return Err(AgentError::Parse { line: n, reason: "expected layer sizes" });
        }
        let sizes = parts
            .map(|p| p.parse::<usize>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| AgentError::Parse { line: n, reason: "bad layer size" })?;
        let mut net = Self::zeros(&sizes).map_err(|_| AgentError::Parse { line: n, reason: "bad architecture" })?;
        for layer in &mut net.layers {
            let (n, _) = next()?;
            let _ = n;
            for o in 0..layer.outputs {
                let (n, row) = next()?;
                parse_row(row, n, &mut layer.weights[o * layer.inputs..(o + 1) * layer.inputs])?;
            }
            let _ = next()?;
            let (n, row) = next()?;
            parse_row(row, n, &mut layer.biases)?;
        }
        Ok(net)
    }
}

fn push_row(out: &mut String, row: &[f64]) {
    for (i, v) in row.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{v:?}");
    }
    out.push('\n');
}

fn parse_row(row: &str, line: usize, dst: &mut [f64]) -> Result<(), AgentError> {
    let mut count = 0;
    for (slot, tok) in dst.iter_mut().zip(row.split_whitespace()) {
        *slot = tok
            .parse()
            .map_err(|_| AgentError::Parse { line, reason: "bad number" })?;
        count += 1;
    }
    if count != dst.len() || row.split_whitespace().count() != dst.len() {
        return Err(AgentError::Parse { line, reason: "wrong number of values" });
    }
    Ok(())
}

/// Gradient with the same layout as a [`ValueNetwork`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub layers: Vec<Dense>,
}

impl Gradient {
    fn zeros_like(net: &ValueNetwork) -> Self {
        Self {
            layers: net.layers.iter().map(|l| Dense::zeros(l.inputs, l.outputs)).collect(),
        }
    }

    /// Same ordering as [`ValueNetwork::params`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut p = Vec::new();
        for l in &self.layers {
            p.extend_from_slice(&l.weights);
            p.extend_from_slice(&l.biases);
        }
        p
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.flatten().iter().map(|g| g * g).sum())
    }

    fn scale(&mut self, k: f64) {
        for l in &mut self.layers {
            l.weights.iter_mut().chain(l.biases.iter_mut()).for_each(|v| *v *= k);
        }
    }
}

/// `y_i = r_i + γ · max_a' target(s'_i)[a']`, or `r_i` for terminal samples.
pub fn td_targets(batch: &[Transition], target: &ValueNetwork, gamma: f64) -> Result<Vec<f64>, AgentError> {
    if batch.is_empty() {
        return Err(AgentError::EmptyBatch);
    }
    batch
        .iter()
        .map(|t| {
            if t.terminal || gamma == 0.0 {
                Ok(t.reward)
            } else {
                let next = target.forward(&t.next_state)?;
                Ok(t.reward + gamma * next.iter().copied().fold(f64::NEG_INFINITY, f64::max))
            }
        })
        .collect()
}

/// One plain gradient-descent step on the mean squared TD error. Returns
/// the batch loss measured before the update.
///
/// With `max_grad_norm`, the gradient is rescaled to at most that norm.
pub fn sgd_step(
    net: &mut ValueNetwork,
    batch: &[Transition],
    targets: &[f64],
    learning_rate: f64,
    max_grad_norm: Option<f64>,
) -> Result<f64, AgentError> {
    let (loss, mut grad) = net.loss_and_gradient(batch, targets)?;
    if !loss.is_finite() {
        return Err(AgentError::NonFiniteLoss);
    }
    if let Some(max) = max_grad_norm {
        let norm = grad.norm();
        if norm > max {
            grad.scale(max / norm);
        }
    }
    if learning_rate != 0.0 {
        net.apply_gradient(&grad, learning_rate);
    }
    Ok(loss)
}

/// Frozen copy of the online network, refreshed every `sync_interval` steps.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetNetwork {
    pub net: ValueNetwork,
    pub sync_interval: usize,
}

impl TargetNetwork {
    pub fn new(online: &ValueNetwork, sync_interval: usize) -> Self {
        Self {
            net: online.clone(),
            sync_interval,
        }
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>, AgentError> {
        self.net.forward(input)
    }
}

/// Copies the online parameters into the target.
pub fn sync_target(online: &ValueNetwork, target: &mut TargetNetwork) -> Result<(), AgentError> {
    if online.sizes() != target.net.sizes() {
        return Err(AgentError::ArchitectureMismatch);
    }
    for (dst, src) in target.net.layers.iter_mut().zip(&online.layers) {
        dst.weights.copy_from_slice(&src.weights);
        dst.biases.copy_from_slice(&src.biases);
    }
    Ok(())
}
