//! Stacked GRU/LSTM sequence-to-one classifier over raw item weights.
//!
//! All parameters live in one flat vector so the optimizer and snapshots can
//! treat them uniformly. Layer `l` stores, in order:
//!
//! * `W`: `gates * hidden` rows of `input` columns,
//! * `U`: `gates * hidden` rows of `hidden` columns,
//! * `b`: `gates * hidden`,
//!
//! with gate blocks ordered `z, r, h~` (GRU) or `i, f, o, c~` (LSTM). The
//! output layer follows: `V` (4 rows of the last hidden width) and its bias.

use binsel_core::dataset::Dataset;
use binsel_core::{HeuristicKind, Instance};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adam::{adam_step, AdamConfig, AdamState};
use crate::error::{ModelError, Result};
use crate::{argmax, log_softmax, softmax, OUTPUTS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellKind {
    Gru,
    Lstm,
}

impl CellKind {
    pub fn gates(self) -> usize {
        match self {
            CellKind::Gru => 3,
            CellKind::Lstm => 4,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CellKind::Gru => "gru",
            CellKind::Lstm => "lstm",
        }
    }
}

impl std::fmt::Display for CellKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for CellKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "gru" => Ok(CellKind::Gru),
            "lstm" => Ok(CellKind::Lstm),
            other => Err(format!("unknown cell kind {other:?}")),
        }
    }
}

/// Indicator vector in BF, FF, NF, WF order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct OneHotTarget(HeuristicKind);

impl OneHotTarget {
    pub fn new(class: HeuristicKind) -> Self {
        Self(class)
    }

    pub fn class(self) -> HeuristicKind {
        self.0
    }

    pub fn index(self) -> usize {
        self.0.index()
    }

    pub fn to_array(self) -> [f64; OUTPUTS] {
        let mut v = [0.0; OUTPUTS];
        v[self.0.index()] = 1.0;
        v
    }
}

impl From<HeuristicKind> for OneHotTarget {
    fn from(h: HeuristicKind) -> Self {
        Self(h)
    }
}

/// `-ln p[target]` for an already normalised distribution.
pub fn cross_entropy(probs: &[f64; OUTPUTS], target: OneHotTarget) -> f64 {
    -probs[target.index()].ln()
}

/// Cross-entropy computed from pre-softmax scores through log-sum-exp.
pub fn cross_entropy_from_logits(logits: &[f64; OUTPUTS], target: OneHotTarget) -> f64 {
    -log_softmax(logits)[target.index()]
}

/// View of one layer's weights.
#[derive(Debug, Clone, Copy)]
pub struct CellParams<'a> {
    pub w: &'a [f64],
    pub u: &'a [f64],
    pub b: &'a [f64],
    pub input: usize,
    pub hidden: usize,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Pre-activations `b + W x + U h` for rows `rows` of the stacked gates.
fn gate_inputs(p: &CellParams<'_>, x: &[f64], h: &[f64], rows: std::ops::Range<usize>, out: &mut [f64]) {
    for (o, j) in out.iter_mut().zip(rows) {
        *o = p.b[j]
            + dot(&p.w[j * p.input..(j + 1) * p.input], x)
            + dot(&p.u[j * p.hidden..(j + 1) * p.hidden], h);
    }
}

/// Writes `z, r, h~` into `gates` and returns through `h_out`.
fn gru_step(p: &CellParams<'_>, x: &[f64], h_prev: &[f64], gates: &mut [f64], h_out: &mut [f64]) {
    let n = p.hidden;
    let (zr, cand) = gates.split_at_mut(2 * n);
    gate_inputs(p, x, h_prev, 0..2 * n, zr);
    for a in zr.iter_mut() {
        *a = sigmoid(*a);
    }
    let (z, r) = zr.split_at(n);
    let reset: Vec<f64> = r.iter().zip(h_prev).map(|(r, h)| r * h).collect();
    for (k, j) in (2 * n..3 * n).enumerate() {
        let a = p.b[j]
            + dot(&p.w[j * p.input..(j + 1) * p.input], x)
            + dot(&p.u[j * n..(j + 1) * n], &reset);
        cand[k] = a.tanh();
    }
    for k in 0..n {
        h_out[k] = (1.0 - z[k]) * h_prev[k] + z[k] * cand[k];
    }
}

/// Writes `i, f, o, c~` into `gates`, the new cell into `c_out` and the new
/// hidden state into `h_out`.
fn lstm_step(
    p: &CellParams<'_>,
    x: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
    gates: &mut [f64],
    h_out: &mut [f64],
    c_out: &mut [f64],
) {
    let n = p.hidden;
    gate_inputs(p, x, h_prev, 0..4 * n, gates);
    for a in &mut gates[..3 * n] {
        *a = sigmoid(*a);
    }
    for a in &mut gates[3 * n..] {
        *a = a.tanh();
    }
    for k in 0..n {
        let (i, f, o, g) = (gates[k], gates[n + k], gates[2 * n + k], gates[3 * n + k]);
        c_out[k] = f * c_prev[k] + i * g;
        h_out[k] = o * c_out[k].tanh();
    }
}

pub fn gru_cell_forward(x: &[f64], h_prev: &[f64], params: &CellParams<'_>) -> Vec<f64> {
    let mut gates = vec![0.0; 3 * params.hidden];
    let mut h = vec![0.0; params.hidden];
    gru_step(params, x, h_prev, &mut gates, &mut h);
    h
}

pub fn lstm_cell_forward(x: &[f64], h_prev: &[f64], c_prev: &[f64], params: &CellParams<'_>) -> (Vec<f64>, Vec<f64>) {
    let mut gates = vec![0.0; 4 * params.hidden];
    let mut h = vec![0.0; params.hidden];
    let mut c = vec![0.0; params.hidden];
    lstm_step(params, x, h_prev, c_prev, &mut gates, &mut h, &mut c);
    (h, c)
}

#[derive(Debug, Clone, Copy)]
struct LayerShape {
    input: usize,
    hidden: usize,
    offset: usize,
}

impl LayerShape {
    fn rows(&self, gates: usize) -> usize {
        gates * self.hidden
    }

    fn w(&self, gates: usize) -> std::ops::Range<usize> {
        self.offset..self.offset + self.rows(gates) * self.input
    }

    fn u(&self, gates: usize) -> std::ops::Range<usize> {
        let start = self.w(gates).end;
        start..start + self.rows(gates) * self.hidden
    }

    fn b(&self, gates: usize) -> std::ops::Range<usize> {
        let start = self.u(gates).end;
        start..start + self.rows(gates)
    }

    fn end(&self, gates: usize) -> usize {
        self.b(gates).end
    }
}

/// Activations of one layer over a whole sequence.
struct LayerTrace {
    /// Post-activation gate values, `steps * gates * hidden`.
    gates: Vec<f64>,
    /// Hidden states `h_0 .. h_T`, `(steps + 1) * hidden`.
    h: Vec<f64>,
    /// Cell states `c_0 .. c_T` (LSTM only).
    c: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecurrentNetwork {
    cell: CellKind,
    input_size: usize,
    hidden: Vec<usize>,
    /// Factor applied to raw item weights before they enter the network.
    input_scale: f64,
    params: Vec<f64>,
}

impl RecurrentNetwork {
    /// Network with every parameter zero.
    pub fn zeros(cell: CellKind, hidden: &[usize]) -> Self {
        assert!(!hidden.is_empty() && hidden.iter().all(|&h| h > 0), "layer widths must be positive");
        let mut net = Self {
            cell,
            input_size: 1,
            hidden: hidden.to_vec(),
            input_scale: 1.0,
            params: Vec::new(),
        };
        net.params = vec![0.0; net.expected_len()];
        net
    }

    /// Glorot-uniform weights, zero biases, forget-gate bias 1 for LSTM.
    pub fn new(cell: CellKind, hidden: &[usize], seed: u64) -> Self {
        let mut net = Self::zeros(cell, hidden);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = cell.gates();
        for shape in net.shapes() {
            let limit_w = (6.0 / (shape.input + shape.hidden) as f64).sqrt();
            let limit_u = (6.0 / (2 * shape.hidden) as f64).sqrt();
            for p in &mut net.params[shape.w(g)] {
                *p = rng.random_range(-limit_w..limit_w);
            }
            for p in &mut net.params[shape.u(g)] {
                *p = rng.random_range(-limit_u..limit_u);
            }
            if cell == CellKind::Lstm {
                let b = shape.b(g);
                for p in &mut net.params[b.start + shape.hidden..b.start + 2 * shape.hidden] {
                    *p = 1.0;
                }
            }
        }
        let last = net.last_hidden();
        let limit_v = (6.0 / (last + OUTPUTS) as f64).sqrt();
        let v = net.output_offset();
        for p in &mut net.params[v..v + OUTPUTS * last] {
            *p = rng.random_range(-limit_v..limit_v);
        }
        net
    }

    /// Two recurrent layers of 32 units.
    pub fn standard(cell: CellKind, seed: u64) -> Self {
        Self::new(cell, &[32, 32], seed)
    }

    pub fn cell(&self) -> CellKind {
        self.cell
    }

    pub fn hidden_sizes(&self) -> &[usize] {
        &self.hidden
    }

    pub fn input_scale(&self) -> f64 {
        self.input_scale
    }

    pub fn set_input_scale(&mut self, scale: f64) {
        self.input_scale = scale;
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    /// Checks that a deserialized network is internally consistent.
    pub fn validate(&self) -> Result<()> {
        if self.hidden.is_empty() || self.hidden.contains(&0) || self.input_size == 0 {
            return Err(ModelError::InvalidConfig("layer widths must be positive".into()));
        }
        if self.params.len() != self.expected_len() {
            return Err(ModelError::InvalidConfig(format!(
                "expected {} parameters, found {}",
                self.expected_len(),
                self.params.len()
            )));
        }
        if !self.params.iter().all(|p| p.is_finite()) || !self.input_scale.is_finite() {
            return Err(ModelError::InvalidConfig("non-finite parameter".into()));
        }
        Ok(())
    }

    fn shapes(&self) -> Vec<LayerShape> {
        let g = self.cell.gates();
        let mut shapes = Vec::with_capacity(self.hidden.len());
        let mut input = self.input_size;
        let mut offset = 0;
        for &hidden in &self.hidden {
            let shape = LayerShape { input, hidden, offset };
            offset = shape.end(g);
            input = hidden;
            shapes.push(shape);
        }
        shapes
    }

    fn last_hidden(&self) -> usize {
        *self.hidden.last().expect("at least one layer")
    }

    fn output_offset(&self) -> usize {
        self.shapes().last().map_or(0, |s| s.end(self.cell.gates()))
    }

    fn expected_len(&self) -> usize {
        self.output_offset() + OUTPUTS * self.last_hidden() + OUTPUTS
    }

    /// Weights of recurrent layer `layer`.
    pub fn layer_params(&self, layer: usize) -> CellParams<'_> {
        let shape = self.shapes()[layer];
        let g = self.cell.gates();
        CellParams {
            w: &self.params[shape.w(g)],
            u: &self.params[shape.u(g)],
            b: &self.params[shape.b(g)],
            input: shape.input,
            hidden: shape.hidden,
        }
    }

    /// Item weights as network inputs.
    pub fn scaled_inputs(&self, instance: &Instance) -> Vec<f64> {
        instance.items().iter().map(|&w| f64::from(w) * self.input_scale).collect()
    }

    fn trace(&self, inputs: &[f64]) -> Vec<LayerTrace> {
        let steps = inputs.len() / self.input_size;
        let g = self.cell.gates();
        let mut traces: Vec<LayerTrace> = Vec::with_capacity(self.hidden.len());
        for (l, shape) in self.shapes().into_iter().enumerate() {
            let p = self.layer_params(l);
            let n = shape.hidden;
            let mut gates = vec![0.0; steps * g * n];
            let mut h = vec![0.0; (steps + 1) * n];
            let mut c = if self.cell == CellKind::Lstm {
                vec![0.0; (steps + 1) * n]
            } else {
                Vec::new()
            };
            let below: &[f64] = match traces.last() {
                Some(t) => &t.h[self.hidden[l - 1]..],
                None => inputs,
            };
            for t in 0..steps {
                let x = &below[t * shape.input..(t + 1) * shape.input];
                let (done, rest) = h.split_at_mut((t + 1) * n);
                let h_prev = &done[t * n..];
                let h_out = &mut rest[..n];
                let gate = &mut gates[t * g * n..(t + 1) * g * n];
                match self.cell {
                    CellKind::Gru => gru_step(&p, x, h_prev, gate, h_out),
                    CellKind::Lstm => {
                        let (c_done, c_rest) = c.split_at_mut((t + 1) * n);
                        lstm_step(&p, x, h_prev, &c_done[t * n..], gate, h_out, &mut c_rest[..n]);
                    }
                }
            }
            traces.push(LayerTrace { gates, h, c });
        }
        traces
    }

    fn output_logits(&self, h_last: &[f64]) -> [f64; OUTPUTS] {
        let n = self.last_hidden();
        let v = self.output_offset();
        let bias = v + OUTPUTS * n;
        let mut logits = [0.0; OUTPUTS];
        for (o, l) in logits.iter_mut().enumerate() {
            *l = self.params[bias + o] + dot(&self.params[v + o * n..v + (o + 1) * n], h_last);
        }
        logits
    }

    /// Pre-softmax scores after reading the whole (scaled) sequence.
    pub fn logits(&self, inputs: &[f64]) -> [f64; OUTPUTS] {
        assert!(
            !inputs.is_empty() && inputs.len() % self.input_size == 0,
            "sequence must contain at least one step"
        );
        let traces = self.trace(inputs);
        let last = traces.last().expect("at least one layer");
        let n = self.last_hidden();
        self.output_logits(&last.h[last.h.len() - n..])
    }

    /// Class probabilities for an already scaled sequence.
    pub fn forward_sequence(&self, inputs: &[f64]) -> [f64; OUTPUTS] {
        softmax(&self.logits(inputs))
    }

    /// Scales the instance and returns the argmax heuristic with the
    /// probability vector.
    pub fn predict(&self, instance: &Instance) -> (HeuristicKind, [f64; OUTPUTS]) {
        let probs = self.forward_sequence(&self.scaled_inputs(instance));
        (HeuristicKind::ALL[argmax(&probs)], probs)
    }

    /// Adds `scale * dLoss/dparams` for one sequence into `grad` and returns
    /// the loss and the logits.
    fn accumulate_gradient(&self, inputs: &[f64], target: OneHotTarget, scale: f64, grad: &mut [f64]) -> (f64, [f64; OUTPUTS]) {
        let traces = self.trace(inputs);
        let steps = inputs.len() / self.input_size;
        let shapes = self.shapes();

        let last_trace = traces.last().expect("at least one layer");
        let n_last = self.last_hidden();
        let h_last = &last_trace.h[steps * n_last..];
        let logits = self.output_logits(h_last);
        let log_p = log_softmax(&logits);
        let loss = -log_p[target.index()];

        let mut d_logits = [0.0; OUTPUTS];
        for o in 0..OUTPUTS {
            d_logits[o] = (log_p[o].exp() - if o == target.index() { 1.0 } else { 0.0 }) * scale;
        }
        let v = self.output_offset();
        let bias = v + OUTPUTS * n_last;
        // Gradient flowing into the hidden states of the layer being processed.
        let mut d_above = vec![0.0; steps * n_last];
        for o in 0..OUTPUTS {
            grad[bias + o] += d_logits[o];
            for k in 0..n_last {
                grad[v + o * n_last + k] += d_logits[o] * h_last[k];
                d_above[(steps - 1) * n_last + k] += self.params[v + o * n_last + k] * d_logits[o];
            }
        }

        for l in (0..shapes.len()).rev() {
            let shape = shapes[l];
            let below: &[f64] = if l == 0 {
                inputs
            } else {
                &traces[l - 1].h[shapes[l - 1].hidden..]
            };
            let need_dx = l > 0;
            let mut d_below = if need_dx {
                vec![0.0; steps * shape.input]
            } else {
                Vec::new()
            };
            match self.cell {
                CellKind::Gru => self.gru_backward(&shape, &traces[l], below, &d_above, &mut d_below, need_dx, grad),
                CellKind::Lstm => self.lstm_backward(&shape, &traces[l], below, &d_above, &mut d_below, need_dx, grad),
            }
            d_above = d_below;
        }
        (loss, logits)
    }

    #[allow(clippy::too_many_arguments)]
    fn gru_backward(
        &self,
        shape: &LayerShape,
        trace: &LayerTrace,
        below: &[f64],
        d_above: &[f64],
        d_below: &mut [f64],
        need_dx: bool,
        grad: &mut [f64],
    ) {
        let g = 3;
        let n = shape.hidden;
        let m = shape.input;
        let steps = below.len() / m;
        let (w_r, u_r, b_r) = (shape.w(g), shape.u(g), shape.b(g));
        let w = &self.params[w_r.clone()];
        let u = &self.params[u_r.clone()];

        let mut dh = vec![0.0; n];
        let mut da = vec![0.0; 3 * n];
        let mut d_reset = vec![0.0; n];
        let mut dh_prev = vec![0.0; n];
        let mut reset = vec![0.0; n];
        for t in (0..steps).rev() {
            for k in 0..n {
                dh[k] += d_above[t * n + k];
            }
            let gates = &trace.gates[t * 3 * n..(t + 1) * 3 * n];
            let (z, rest) = gates.split_at(n);
            let (r, cand) = rest.split_at(n);
            let h_prev = &trace.h[t * n..(t + 1) * n];
            let x = &below[t * m..(t + 1) * m];

            for k in 0..n {
                da[k] = dh[k] * (cand[k] - h_prev[k]) * z[k] * (1.0 - z[k]);
                da[2 * n + k] = dh[k] * z[k] * (1.0 - cand[k] * cand[k]);
                reset[k] = r[k] * h_prev[k];
                d_reset[k] = 0.0;
            }
            // Candidate rows read r * h_prev through U_h.
            for j in 0..n {
                let row = 2 * n + j;
                let a = da[row];
                let u_row = &u[row * n..(row + 1) * n];
                let gu = &mut grad[u_r.start + row * n..u_r.start + (row + 1) * n];
                for k in 0..n {
                    d_reset[k] += u_row[k] * a;
                    gu[k] += a * reset[k];
                }
            }
            for k in 0..n {
                da[n + k] = d_reset[k] * h_prev[k] * r[k] * (1.0 - r[k]);
                dh_prev[k] = dh[k] * (1.0 - z[k]) + d_reset[k] * r[k];
            }
            // Update and reset rows read h_prev through U_z and U_r.
            for row in 0..2 * n {
                let a = da[row];
                let u_row = &u[row * n..(row + 1) * n];
                let gu = &mut grad[u_r.start + row * n..u_r.start + (row + 1) * n];
                for k in 0..n {
                    dh_prev[k] += u_row[k] * a;
                    gu[k] += a * h_prev[k];
                }
            }
            for row in 0..3 * n {
                let a = da[row];
                grad[b_r.start + row] += a;
                let gw = &mut grad[w_r.start + row * m..w_r.start + (row + 1) * m];
                for i in 0..m {
                    gw[i] += a * x[i];
                }
                if need_dx {
                    let w_row = &w[row * m..(row + 1) * m];
                    let dx = &mut d_below[t * m..(t + 1) * m];
                    for i in 0..m {
                        dx[i] += w_row[i] * a;
                    }
                }
            }
            std::mem::swap(&mut dh, &mut dh_prev);
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn lstm_backward(
        &self,
        shape: &LayerShape,
        trace: &LayerTrace,
        below: &[f64],
        d_above: &[f64],
        d_below: &mut [f64],
        need_dx: bool,
        grad: &mut [f64],
    ) {
        let g = 4;
        let n = shape.hidden;
        let m = shape.input;
        let steps = below.len() / m;
        let (w_r, u_r, b_r) = (shape.w(g), shape.u(g), shape.b(g));
        let w = &self.params[w_r.clone()];
        let u = &self.params[u_r.clone()];

        let mut dh = vec![0.0; n];
        let mut dc = vec![0.0; n];
        let mut da = vec![0.0; 4 * n];
        let mut dh_prev = vec![0.0; n];
        for t in (0..steps).rev() {
            let gates = &trace.gates[t * 4 * n..(t + 1) * 4 * n];
            let c = &trace.c[(t + 1) * n..(t + 2) * n];
            let c_prev = &trace.c[t * n..(t + 1) * n];
            let h_prev = &trace.h[t * n..(t + 1) * n];
            let x = &below[t * m..(t + 1) * m];
            for k in 0..n {
                dh[k] += d_above[t * n + k];
                let (i, f, o, cand) = (gates[k], gates[n + k], gates[2 * n + k], gates[3 * n + k]);
                let tc = c[k].tanh();
                dc[k] += dh[k] * o * (1.0 - tc * tc);
                da[k] = dc[k] * cand * i * (1.0 - i);
                da[n + k] = dc[k] * c_prev[k] * f * (1.0 - f);
                da[2 * n + k] = dh[k] * tc * o * (1.0 - o);
                da[3 * n + k] = dc[k] * i * (1.0 - cand * cand);
                dc[k] *= f;
                dh_prev[k] = 0.0;
            }
            for row in 0..4 * n {
                let a = da[row];
                let u_row = &u[row * n..(row + 1) * n];
                let gu = &mut grad[u_r.start + row * n..u_r.start + (row + 1) * n];
                for k in 0..n {
                    dh_prev[k] += u_row[k] * a;
                    gu[k] += a * h_prev[k];
                }
                grad[b_r.start + row] += a;
                let gw = &mut grad[w_r.start + row * m..w_r.start + (row + 1) * m];
                for i in 0..m {
                    gw[i] += a * x[i];
                }
                if need_dx {
                    let w_row = &w[row * m..(row + 1) * m];
                    let dx = &mut d_below[t * m..(t + 1) * m];
                    for i in 0..m {
                        dx[i] += w_row[i] * a;
                    }
                }
            }
            std::mem::swap(&mut dh, &mut dh_prev);
        }
    }

    /// Mean loss over `batch` with its exact gradient. Sequences are processed
    /// in parallel and their gradients summed in batch order.
    pub fn backward_batch(&self, batch: &[SequenceExample]) -> BatchGradient {
        assert!(!batch.is_empty(), "batch must not be empty");
        let scale = 1.0 / batch.len() as f64;
        let parts: Vec<(Vec<f64>, f64, bool)> = batch
            .par_iter()
            .map(|ex| {
                let mut grad = vec![0.0; self.params.len()];
                let (loss, logits) = self.accumulate_gradient(&ex.inputs, ex.target, scale, &mut grad);
                (grad, loss, argmax(&logits) == ex.target.index())
            })
            .collect();
        let mut grads = vec![0.0; self.params.len()];
        let mut loss = 0.0;
        let mut correct = 0;
        for (g, l, hit) in parts {
            for (acc, x) in grads.iter_mut().zip(&g) {
                *acc += x;
            }
            loss += l;
            correct += usize::from(hit);
        }
        BatchGradient {
            grads,
            loss: loss * scale,
            correct,
        }
    }

    /// Mean loss and accuracy over `examples` without touching the network.
    pub fn score(&self, examples: &[SequenceExample]) -> (f64, f64) {
        if examples.is_empty() {
            return (f64::NAN, f64::NAN);
        }
        let results: Vec<(f64, bool)> = examples
            .par_iter()
            .map(|ex| {
                let logits = self.logits(&ex.inputs);
                (cross_entropy_from_logits(&logits, ex.target), argmax(&logits) == ex.target.index())
            })
            .collect();
        let n = examples.len() as f64;
        let loss = results.iter().map(|r| r.0).sum::<f64>() / n;
        let acc = results.iter().filter(|r| r.1).count() as f64 / n;
        (loss, acc)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceExample {
    /// Scaled inputs, one per step.
    pub inputs: Vec<f64>,
    pub target: OneHotTarget,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchGradient {
    pub grads: Vec<f64>,
    pub loss: f64,
    /// Sequences whose argmax already matched the target.
    pub correct: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub seed: u64,
    /// Multiplier for item weights; `None` divides by the bin capacity.
    pub input_scaling: Option<f64>,
}

impl TrainConfig {
    pub fn new(epochs: usize, seed: u64) -> Self {
        Self {
            epochs,
            batch_size: 32,
            adam: AdamConfig::default(),
            seed,
            input_scaling: None,
        }
    }

    /// 300 epochs for sequences of up to 120 items, 700 for longer ones.
    pub fn for_length(n_items: usize, seed: u64) -> Self {
        Self::new(if n_items <= 120 { 300 } else { 700 }, seed)
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(ModelError::InvalidConfig("batch size must be at least 1".into()));
        }
        if let Some(s) = self.input_scaling {
            if !(s > 0.0 && s.is_finite()) {
                return Err(ModelError::InvalidConfig(format!("input scaling must be positive, got {s}")));
            }
        }
        self.adam.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean loss over the epoch's mini-batches, measured before each update.
    pub loss: f64,
    pub accuracy: f64,
    pub validation_loss: Option<f64>,
    pub validation_accuracy: Option<f64>,
}

/// Converts labelled records to training examples at the given scale. The
/// target is the canonical winner of each label.
pub fn dataset_examples(dataset: &Dataset, scale: f64) -> Vec<SequenceExample> {
    dataset
        .records()
        .iter()
        .map(|r| SequenceExample {
            inputs: r.instance.items().iter().map(|&w| f64::from(w) * scale).collect(),
            target: r.label.winner().into(),
        })
        .collect()
}

/// Mini-batch Adam over prepared sequences.
pub fn train_sequences(
    mut net: RecurrentNetwork,
    train: &[SequenceExample],
    config: &TrainConfig,
    validation: Option<&[SequenceExample]>,
) -> Result<(RecurrentNetwork, Vec<EpochStats>)> {
    config.validate()?;
    if train.is_empty() {
        return Err(ModelError::EmptyTrainingSet);
    }
    if train.iter().any(|e| e.inputs.is_empty()) {
        return Err(ModelError::Core(binsel_core::Error::EmptyInstance));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut state = AdamState::new(net.n_params());
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut correct = 0;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<SequenceExample> = chunk.iter().map(|&i| train[i].clone()).collect();
            let step = net.backward_batch(&batch);
            if !step.loss.is_finite() || !step.grads.iter().all(|g| g.is_finite()) {
                return Err(ModelError::Divergence {
                    epoch,
                    learning_rate: config.adam.learning_rate,
                    loss: step.loss,
                });
            }
            loss_sum += step.loss * batch.len() as f64;
            correct += step.correct;
            adam_step(&mut net.params, &step.grads, &mut state, &config.adam);
        }
        let (validation_loss, validation_accuracy) = match validation {
            Some(v) if !v.is_empty() => {
                let (l, a) = net.score(v);
                (Some(l), Some(a))
            }
            _ => (None, None),
        };
        history.push(EpochStats {
            epoch,
            loss: loss_sum / train.len() as f64,
            accuracy: correct as f64 / train.len() as f64,
            validation_loss,
            validation_accuracy,
        });
    }
    Ok((net, history))
}

/// Trains on a labelled dataset. Inputs are scaled by `config.input_scaling`
/// or, by default, by the reciprocal of the shared capacity; the scale is kept
/// in the returned network.
pub fn train_recurrent(
    mut net: RecurrentNetwork,
    train: &Dataset,
    config: &TrainConfig,
    validation: Option<&Dataset>,
) -> Result<(RecurrentNetwork, Vec<EpochStats>)> {
    if train.is_empty() {
        return Err(ModelError::EmptyTrainingSet);
    }
    let capacity = train.capacity().ok_or(ModelError::MixedCapacity)?;
    if let Some(v) = validation {
        if !v.is_empty() && v.capacity() != Some(capacity) {
            return Err(ModelError::MixedCapacity);
        }
    }
    let scale = config.input_scaling.unwrap_or(1.0 / f64::from(capacity));
    net.set_input_scale(scale);
    let examples = dataset_examples(train, scale);
    let held_out = validation.map(|v| dataset_examples(v, scale));
    train_sequences(net, &examples, config, held_out.as_deref())
}
