//! Stacked LSTM with a linear softmax head, forward and backward passes.
//!
//! Gate weights are stacked in the order input, forget, cell, output:
//! `w_ih` is `[4H x I]` and `w_hh` is `[4H x H]`, both row-major, so rows
//! `0..H` hold `W_ii`/`W_hi`, rows `H..2H` hold `W_if`/`W_hf`, and so on.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ClassifyError;
use crate::features::FeatureSequence;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmLayer {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub w_ih: Vec<f64>,
    pub w_hh: Vec<f64>,
    pub b_ih: Vec<f64>,
    pub b_hh: Vec<f64>,
}

impl LstmLayer {
    fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        let g = 4 * hidden_dim;
        Self {
            input_dim,
            hidden_dim,
            w_ih: vec![0.0; g * input_dim],
            w_hh: vec![0.0; g * hidden_dim],
            b_ih: vec![0.0; g],
            b_hh: vec![0.0; g],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmModel {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub layers: Vec<LstmLayer>,
    /// `[2 x H]` row-major.
    pub head_w: Vec<f64>,
    pub head_b: Vec<f64>,
    /// Dropout on the hidden sequence between stacked layers (training only).
    pub dropout: f64,
}

pub const N_CLASSES: usize = 2;

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut s = [0.0; 4];
    let chunks = n / 4;
    for i in 0..chunks {
        let j = 4 * i;
        s[0] += a[j] * b[j];
        s[1] += a[j + 1] * b[j + 1];
        s[2] += a[j + 2] * b[j + 2];
        s[3] += a[j + 3] * b[j + 3];
    }
    let mut tail = 0.0;
    for j in 4 * chunks..n {
        tail += a[j] * b[j];
    }
    (s[0] + s[1]) + (s[2] + s[3]) + tail
}

/// `y += alpha * x`
#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Numerically stable two-class softmax.
pub fn softmax(logits: &[f64; N_CLASSES]) -> [f64; N_CLASSES] {
    let m = logits[0].max(logits[1]);
    let e0 = (logits[0] - m).exp();
    let e1 = (logits[1] - m).exp();
    let s = e0 + e1;
    [e0 / s, e1 / s]
}

/// Activations of one layer over the valid steps, kept for backprop.
#[derive(Debug, Clone)]
struct LayerCache {
    /// Layer inputs `x_t` (after dropout), `[T][I]`.
    inputs: Vec<Vec<f64>>,
    /// Gate activations `[T][4H]` in i, f, g, o order.
    gates: Vec<Vec<f64>>,
    cells: Vec<Vec<f64>>,
    tanh_cells: Vec<Vec<f64>>,
    hidden: Vec<Vec<f64>>,
}

/// Result of a forward pass.
#[derive(Debug, Clone)]
pub struct Forward {
    pub probs: [f64; N_CLASSES],
    /// No valid steps: the output is uniform and carries no gradient.
    pub degenerate: bool,
    caches: Vec<LayerCache>,
    /// Dropout masks applied to each layer's input (already scaled), layers 1..
    masks: Vec<Option<Vec<Vec<f64>>>>,
}

impl Forward {
    /// Final-step hidden state of each layer.
    pub fn last_hidden(&self) -> Vec<Vec<f64>> {
        self.caches
            .iter()
            .map(|c| c.hidden.last().cloned().unwrap_or_default())
            .collect()
    }

    /// Hidden states of layer `l` at every valid step.
    pub fn hidden_states(&self, l: usize) -> &[Vec<f64>] {
        &self.caches[l].hidden
    }
}

impl LstmModel {
    pub fn zeros(input_dim: usize, hidden_dim: usize, n_layers: usize, dropout: f64) -> Self {
        let layers = (0..n_layers)
            .map(|l| LstmLayer::zeros(if l == 0 { input_dim } else { hidden_dim }, hidden_dim))
            .collect();
        Self {
            input_dim,
            hidden_dim,
            layers,
            head_w: vec![0.0; N_CLASSES * hidden_dim],
            head_b: vec![0.0; N_CLASSES],
            dropout,
        }
    }

    /// Uniform initialization in `+-1/sqrt(H)` for every parameter.
    pub fn new<R: Rng + ?Sized>(input_dim: usize, hidden_dim: usize, n_layers: usize, dropout: f64, rng: &mut R) -> Self {
        let mut m = Self::zeros(input_dim, hidden_dim, n_layers, dropout);
        let k = 1.0 / (hidden_dim as f64).sqrt();
        for p in m.params_mut() {
            p.iter_mut().for_each(|x| *x = rng.random_range(-k..k));
        }
        m
    }

    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }

    /// Every parameter tensor, in a fixed order.
    pub fn params(&self) -> Vec<&[f64]> {
        let mut v: Vec<&[f64]> = Vec::new();
        for l in &self.layers {
            v.extend([&l.w_ih[..], &l.w_hh[..], &l.b_ih[..], &l.b_hh[..]]);
        }
        v.push(&self.head_w);
        v.push(&self.head_b);
        v
    }

    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v: Vec<&mut [f64]> = Vec::new();
        for l in &mut self.layers {
            v.push(&mut l.w_ih);
            v.push(&mut l.w_hh);
            v.push(&mut l.b_ih);
            v.push(&mut l.b_hh);
        }
        v.push(&mut self.head_w);
        v.push(&mut self.head_b);
        v
    }

    pub fn n_params(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    /// A zero-valued model of the same shape, used as a gradient accumulator.
    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.input_dim, self.hidden_dim, self.n_layers(), self.dropout)
    }

    pub fn is_finite(&self) -> bool {
        self.params().iter().all(|p| p.iter().all(|x| x.is_finite()))
    }

    fn check(&self, seq: &FeatureSequence) -> Result<(), ClassifyError> {
        if seq.valid_len > 0 && seq.dim() != self.input_dim {
            return Err(ClassifyError::Shape(format!(
                "sequence has {} features, model expects {}",
                seq.dim(),
                self.input_dim
            )));
        }
        if seq.valid_len > seq.len() {
            return Err(ClassifyError::Shape("valid_len exceeds sequence length".into()));
        }
        Ok(())
    }

    /// Run the network over the valid steps of `seq`.
    ///
    /// Pass a generator to enable dropout (training mode).
    pub fn forward<R: Rng + ?Sized>(&self, seq: &FeatureSequence, mut dropout_rng: Option<&mut R>) -> Result<Forward, ClassifyError> {
        self.check(seq)?;
        let t_len = seq.valid_len;
        if t_len == 0 {
            return Ok(Forward {
                probs: [0.5, 0.5],
                degenerate: true,
                caches: Vec::new(),
                masks: Vec::new(),
            });
        }
        let h = self.hidden_dim;
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut masks = Vec::with_capacity(self.layers.len());
        let mut layer_in: Vec<Vec<f64>> = seq.steps[..t_len].to_vec();
        for (li, layer) in self.layers.iter().enumerate() {
            let mut mask = None;
            if li > 0 && self.dropout > 0.0 {
                if let Some(r) = dropout_rng.as_deref_mut() {
                    let keep = 1.0 - self.dropout;
                    let m: Vec<Vec<f64>> = (0..t_len)
                        .map(|_| (0..h).map(|_| if r.random::<f64>() < keep { 1.0 / keep } else { 0.0 }).collect())
                        .collect();
                    for (x, mm) in layer_in.iter_mut().zip(&m) {
                        x.iter_mut().zip(mm).for_each(|(a, b)| *a *= b);
                    }
                    mask = Some(m);
                }
            }
            masks.push(mask);

            let mut cache = LayerCache {
                inputs: layer_in,
                gates: Vec::with_capacity(t_len),
                cells: Vec::with_capacity(t_len),
                tanh_cells: Vec::with_capacity(t_len),
                hidden: Vec::with_capacity(t_len),
            };
            let mut h_prev = vec![0.0; h];
            let mut c_prev = vec![0.0; h];
            let in_dim = layer.input_dim;
            for t in 0..t_len {
                let x = &cache.inputs[t];
                let mut a = vec![0.0; 4 * h];
                for (r, ar) in a.iter_mut().enumerate() {
                    *ar = dot(&layer.w_ih[r * in_dim..(r + 1) * in_dim], x)
                        + dot(&layer.w_hh[r * h..(r + 1) * h], &h_prev)
                        + layer.b_ih[r]
                        + layer.b_hh[r];
                }
                let mut c = vec![0.0; h];
                let mut tc = vec![0.0; h];
                let mut hn = vec![0.0; h];
                for j in 0..h {
                    let i_g = sigmoid(a[j]);
                    let f_g = sigmoid(a[h + j]);
                    let g_g = a[2 * h + j].tanh();
                    let o_g = sigmoid(a[3 * h + j]);
                    a[j] = i_g;
                    a[h + j] = f_g;
                    a[2 * h + j] = g_g;
                    a[3 * h + j] = o_g;
                    c[j] = f_g * c_prev[j] + i_g * g_g;
                    tc[j] = c[j].tanh();
                    hn[j] = o_g * tc[j];
                }
                cache.gates.push(a);
                c_prev.clone_from(&c);
                h_prev.clone_from(&hn);
                cache.cells.push(c);
                cache.tanh_cells.push(tc);
                cache.hidden.push(hn);
            }
            layer_in = cache.hidden.clone();
            caches.push(cache);
        }
        let last = caches.last().expect("at least one layer").hidden[t_len - 1].as_slice();
        let logits = [
            dot(&self.head_w[..h], last) + self.head_b[0],
            dot(&self.head_w[h..], last) + self.head_b[1],
        ];
        Ok(Forward {
            probs: softmax(&logits),
            degenerate: false,
            caches,
            masks,
        })
    }

    /// Inference-mode class probabilities.
    pub fn predict_proba(&self, seq: &FeatureSequence) -> Result<[f64; N_CLASSES], ClassifyError> {
        Ok(self.forward::<rand_chacha::ChaCha8Rng>(seq, None)?.probs)
    }

    pub fn predict(&self, seq: &FeatureSequence) -> Result<usize, ClassifyError> {
        let p = self.predict_proba(seq)?;
        Ok(usize::from(p[1] > p[0]))
    }

    /// Accumulate cross-entropy gradients of one example into `grads`;
    /// returns the example's loss.
    pub fn backward(&self, fwd: &Forward, label: usize, grads: &mut LstmModel) -> f64 {
        if fwd.degenerate {
            return -(0.5f64).ln();
        }
        let h = self.hidden_dim;
        let loss = -fwd.probs[label].max(1e-300).ln();
        let mut dlogits = fwd.probs;
        dlogits[label] -= 1.0;

        let top = fwd.caches.last().expect("at least one layer");
        let t_len = top.hidden.len();
        let last = &top.hidden[t_len - 1];
        for (k, &d) in dlogits.iter().enumerate() {
            axpy(d, last, &mut grads.head_w[k * h..(k + 1) * h]);
            grads.head_b[k] += d;
        }
        // gradient flowing into each layer's hidden outputs, [T][H]
        let mut dh_out = vec![vec![0.0; h]; t_len];
        for (k, &d) in dlogits.iter().enumerate() {
            axpy(d, &self.head_w[k * h..(k + 1) * h], &mut dh_out[t_len - 1]);
        }

        for li in (0..self.layers.len()).rev() {
            let layer = &self.layers[li];
            let g = &mut grads.layers[li];
            let cache = &fwd.caches[li];
            let in_dim = layer.input_dim;
            let mut dx = vec![vec![0.0; in_dim]; t_len];
            let mut dh_next = vec![0.0; h];
            let mut dc_next = vec![0.0; h];
            let mut da = vec![0.0; 4 * h];
            let zeros = vec![0.0; h];
            for t in (0..t_len).rev() {
                let gates = &cache.gates[t];
                let c_prev = if t > 0 { &cache.cells[t - 1] } else { &zeros };
                let h_prev = if t > 0 { &cache.hidden[t - 1] } else { &zeros };
                for j in 0..h {
                    let (i_g, f_g, g_g, o_g) = (gates[j], gates[h + j], gates[2 * h + j], gates[3 * h + j]);
                    let tc = cache.tanh_cells[t][j];
                    let dh = dh_out[t][j] + dh_next[j];
                    let d_o = dh * tc;
                    let dc = dh * o_g * (1.0 - tc * tc) + dc_next[j];
                    let d_i = dc * g_g;
                    let d_g = dc * i_g;
                    let d_f = dc * c_prev[j];
                    dc_next[j] = dc * f_g;
                    da[j] = d_i * i_g * (1.0 - i_g);
                    da[h + j] = d_f * f_g * (1.0 - f_g);
                    da[2 * h + j] = d_g * (1.0 - g_g * g_g);
                    da[3 * h + j] = d_o * o_g * (1.0 - o_g);
                }
                dh_next.iter_mut().for_each(|x| *x = 0.0);
                let x = &cache.inputs[t];
                for (r, &d) in da.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    axpy(d, x, &mut g.w_ih[r * in_dim..(r + 1) * in_dim]);
                    axpy(d, h_prev, &mut g.w_hh[r * h..(r + 1) * h]);
                    g.b_ih[r] += d;
                    g.b_hh[r] += d;
                    axpy(d, &layer.w_ih[r * in_dim..(r + 1) * in_dim], &mut dx[t]);
                    axpy(d, &layer.w_hh[r * h..(r + 1) * h], &mut dh_next);
                }
            }
            if li > 0 {
                if let Some(mask) = &fwd.masks[li] {
                    for (d, m) in dx.iter_mut().zip(mask) {
                        d.iter_mut().zip(m).for_each(|(a, b)| *a *= b);
                    }
                }
                dh_out = dx;
            }
        }
        loss
    }
}
