//! Stacked unidirectional LSTM with a per-timestep linear read-out.
//!
//! All parameters live in one flat `f64` block, layer-major:
//!
//! ```text
//! for each layer l:
//!     W  [4H x in_l]   rows grouped by gate in the order i, f, g, o
//!     U  [4H x H]      same gate order
//!     b  [4H]
//! projection W_out [n_labels x H], then b_out [n_labels]
//! ```
//!
//! where `in_0` is the embedding width and `in_l = H` above it.
//! Gates: `i, f, o = σ(Wx + Uh + b)`, `g = tanh(Wx + Uh + b)`,
//! `c' = f ⊙ c + i ⊙ g`, `h' = o ⊙ tanh(c')`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::SegmenterError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LstmShape {
    pub input_dim: usize,
    pub hidden: usize,
    pub layers: usize,
    pub n_labels: usize,
}

impl LstmShape {
    pub fn layer_input(&self, layer: usize) -> usize {
        if layer == 0 {
            self.input_dim
        } else {
            self.hidden
        }
    }

    fn layer_size(&self, layer: usize) -> usize {
        let h4 = 4 * self.hidden;
        h4 * self.layer_input(layer) + h4 * self.hidden + h4
    }

    fn layer_offset(&self, layer: usize) -> usize {
        (0..layer).map(|l| self.layer_size(l)).sum()
    }

    fn projection_offset(&self) -> usize {
        self.layer_offset(self.layers)
    }

    /// Closed form: `4H(d + H + 1) + (L - 1) * 4H(2H + 1) + n(H + 1)`.
    pub fn param_count(&self) -> usize {
        self.projection_offset() + self.n_labels * (self.hidden + 1)
    }

    pub fn validate(&self) -> Result<(), SegmenterError> {
        if self.input_dim == 0 || self.hidden == 0 || self.layers == 0 || self.n_labels == 0 {
            return Err(SegmenterError::InvalidConfig(format!("degenerate network shape {self:?}")));
        }
        Ok(())
    }
}

/// Weights of one layer.
#[derive(Debug, Clone, Copy)]
pub struct LayerView<'a> {
    pub w: &'a [f64],
    pub u: &'a [f64],
    pub b: &'a [f64],
    pub input: usize,
    pub hidden: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmParams {
    shape: LstmShape,
    data: Vec<f64>,
}

impl LstmParams {
    pub fn zeros(shape: LstmShape) -> Self {
        LstmParams { shape, data: vec![0.0; shape.param_count()] }
    }

    pub fn from_flat(shape: LstmShape, data: Vec<f64>) -> Result<Self, SegmenterError> {
        if data.len() != shape.param_count() {
            return Err(SegmenterError::DimensionMismatch {
                expected: shape.param_count(),
                found: data.len(),
            });
        }
        Ok(LstmParams { shape, data })
    }

    /// Matrices uniform in `±1/sqrt(H)`, biases zero except the forget
    /// gate bias, which starts at 1.
    pub fn init<R: Rng + ?Sized>(shape: LstmShape, rng: &mut R) -> Self {
        let mut p = LstmParams::zeros(shape);
        let bound = 1.0 / (shape.hidden as f64).sqrt();
        let h = shape.hidden;
        for l in 0..shape.layers {
            let off = shape.layer_offset(l);
            let n_w = 4 * h * shape.layer_input(l);
            let n_u = 4 * h * h;
            for x in &mut p.data[off..off + n_w + n_u] {
                *x = rng.gen_range(-bound..=bound);
            }
            let b = off + n_w + n_u;
            p.data[b + h..b + 2 * h].fill(1.0);
        }
        let proj = shape.projection_offset();
        for x in &mut p.data[proj..proj + shape.n_labels * h] {
            *x = rng.gen_range(-bound..=bound);
        }
        p
    }

    pub fn shape(&self) -> LstmShape {
        self.shape
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn layer(&self, layer: usize) -> LayerView<'_> {
        let s = self.shape;
        let h4 = 4 * s.hidden;
        let input = s.layer_input(layer);
        let off = s.layer_offset(layer);
        let (w, rest) = self.data[off..].split_at(h4 * input);
        let (u, rest) = rest.split_at(h4 * s.hidden);
        LayerView { w, u, b: &rest[..h4], input, hidden: s.hidden }
    }

    fn projection(&self) -> (&[f64], &[f64]) {
        let off = self.shape.projection_offset();
        let n = self.shape.n_labels * self.shape.hidden;
        let (w, b) = self.data[off..].split_at(n);
        (w, &b[..self.shape.n_labels])
    }
}

/// `out += M x` for a row-major `rows x cols` matrix.
fn gemv_add(out: &mut [f64], m: &[f64], x: &[f64]) {
    let cols = x.len();
    for (o, row) in out.iter_mut().zip(m.chunks_exact(cols)) {
        *o += row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    }
}

/// `out += Mᵀ v` for a row-major `v.len() x out.len()` matrix.
fn gemv_t_add(out: &mut [f64], m: &[f64], v: &[f64]) {
    let cols = out.len();
    for (row, &s) in m.chunks_exact(cols).zip(v) {
        if s != 0.0 {
            for (o, a) in out.iter_mut().zip(row) {
                *o += a * s;
            }
        }
    }
}

/// `M += a bᵀ`.
fn outer_add(m: &mut [f64], a: &[f64], b: &[f64]) {
    let cols = b.len();
    for (row, &s) in m.chunks_exact_mut(cols).zip(a) {
        if s != 0.0 {
            for (x, y) in row.iter_mut().zip(b) {
                *x += s * y;
            }
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Activated gates `[i | f | g | o]` for one step.
fn gates(layer: &LayerView<'_>, x: &[f64], h: &[f64]) -> Vec<f64> {
    let hd = layer.hidden;
    let mut a = layer.b.to_vec();
    gemv_add(&mut a, layer.w, x);
    gemv_add(&mut a, layer.u, h);
    for (k, v) in a.iter_mut().enumerate() {
        *v = if (2 * hd..3 * hd).contains(&k) { v.tanh() } else { sigmoid(*v) };
    }
    a
}

/// One LSTM step: returns the next hidden and cell state.
pub fn lstm_cell(
    x: &[f64],
    h: &[f64],
    c: &[f64],
    layer: &LayerView<'_>,
) -> Result<(Vec<f64>, Vec<f64>), SegmenterError> {
    let mismatch = |expected, found| SegmenterError::DimensionMismatch { expected, found };
    if x.len() != layer.input {
        return Err(mismatch(layer.input, x.len()));
    }
    if h.len() != layer.hidden {
        return Err(mismatch(layer.hidden, h.len()));
    }
    if c.len() != layer.hidden {
        return Err(mismatch(layer.hidden, c.len()));
    }
    let hd = layer.hidden;
    let a = gates(layer, x, h);
    let mut c_next = vec![0.0; hd];
    let mut h_next = vec![0.0; hd];
    for k in 0..hd {
        c_next[k] = a[hd + k] * c[k] + a[k] * a[2 * hd + k];
        h_next[k] = a[3 * hd + k] * c_next[k].tanh();
    }
    Ok((h_next, c_next))
}

/// Inverted dropout between stacked layers. `None` disables it.
pub(crate) struct Dropout<'r, R: Rng + ?Sized> {
    pub p: f64,
    pub rng: &'r mut R,
}

struct LayerCache {
    inputs: Vec<Vec<f64>>,
    gates: Vec<Vec<f64>>,
    cells: Vec<Vec<f64>>,
    hidden: Vec<Vec<f64>>,
    /// Scale applied to this layer's inputs (dropout mask over `1 - p`).
    input_mask: Option<Vec<Vec<f64>>>,
}

pub(crate) struct ForwardCache {
    layers: Vec<LayerCache>,
    pub logits: Vec<Vec<f64>>,
}

pub(crate) fn forward_cached<R: Rng + ?Sized>(
    params: &LstmParams,
    inputs: &[Vec<f64>],
    mut dropout: Option<Dropout<'_, R>>,
) -> Result<ForwardCache, SegmenterError> {
    let s = params.shape;
    if let Some(bad) = inputs.iter().find(|x| x.len() != s.input_dim) {
        return Err(SegmenterError::DimensionMismatch { expected: s.input_dim, found: bad.len() });
    }
    let steps = inputs.len();
    let hd = s.hidden;
    let mut layers: Vec<LayerCache> = Vec::with_capacity(s.layers);
    let mut current: Vec<Vec<f64>> = inputs.to_vec();
    for l in 0..s.layers {
        let mut input_mask = None;
        if l > 0 {
            if let Some(d) = dropout.as_mut().filter(|d| d.p > 0.0) {
                let keep = 1.0 - d.p;
                let masks: Vec<Vec<f64>> = (0..steps)
                    .map(|_| {
                        (0..hd)
                            .map(|_| if d.rng.gen::<f64>() < keep { 1.0 / keep } else { 0.0 })
                            .collect()
                    })
                    .collect();
                for (x, m) in current.iter_mut().zip(&masks) {
                    for (v, k) in x.iter_mut().zip(m) {
                        *v *= k;
                    }
                }
                input_mask = Some(masks);
            }
        }
        let layer = params.layer(l);
        let mut h = vec![0.0; hd];
        let mut c = vec![0.0; hd];
        let mut cache = LayerCache {
            inputs: Vec::with_capacity(steps),
            gates: Vec::with_capacity(steps),
            cells: Vec::with_capacity(steps),
            hidden: Vec::with_capacity(steps),
            input_mask,
        };
        for x in current {
            let a = gates(&layer, &x, &h);
            for k in 0..hd {
                c[k] = a[hd + k] * c[k] + a[k] * a[2 * hd + k];
                h[k] = a[3 * hd + k] * c[k].tanh();
            }
            cache.inputs.push(x);
            cache.gates.push(a);
            cache.cells.push(c.clone());
            cache.hidden.push(h.clone());
        }
        current = cache.hidden.clone();
        layers.push(cache);
    }
    let (w_out, b_out) = params.projection();
    let logits = current
        .iter()
        .map(|h| {
            let mut z = b_out.to_vec();
            gemv_add(&mut z, w_out, h);
            z
        })
        .collect();
    Ok(ForwardCache { layers, logits })
}

/// Per-timestep label logits. Dropout is applied only when `train_mode`
/// is set and `dropout > 0`.
pub fn forward<R: Rng + ?Sized>(
    params: &LstmParams,
    inputs: &[Vec<f64>],
    dropout: f64,
    train_mode: bool,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>, SegmenterError> {
    if inputs.is_empty() {
        return Err(SegmenterError::EmptyInput);
    }
    let dropout = (train_mode && dropout > 0.0).then_some(Dropout { p: dropout, rng });
    Ok(forward_cached(params, inputs, dropout)?.logits)
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / sum).collect()
}

fn log_softmax_at(logits: &[f64], target: usize) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
    logits[target] - lse
}

/// Which backward pass to run. Only [`Backward::Exact`] is correct; the
/// other variant exists to show that the gradient check catches a broken
/// derivation.
#[doc(hidden)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backward {
    Exact,
    /// Forgets to carry the cell gradient to the previous timestep.
    DropCellCarry,
}

/// Adds to `grad` the gradient of `scale * Σ_t mask_t * CE_t` and returns
/// that scaled loss.
pub(crate) fn accumulate_gradient(
    params: &LstmParams,
    cache: &ForwardCache,
    targets: &[usize],
    mask: &[bool],
    scale: f64,
    grad: &mut [f64],
    variant: Backward,
) -> f64 {
    let s = params.shape;
    let hd = s.hidden;
    let steps = cache.logits.len();
    let (w_out, _) = params.projection();
    let proj = s.projection_offset();
    let mut loss = 0.0;

    // read-out
    let mut d_top: Vec<Vec<f64>> = vec![vec![0.0; hd]; steps];
    let top = &cache.layers[s.layers - 1];
    for t in 0..steps {
        if !mask[t] {
            continue;
        }
        let z = &cache.logits[t];
        loss -= scale * log_softmax_at(z, targets[t]);
        let mut dz = softmax(z);
        dz[targets[t]] -= 1.0;
        dz.iter_mut().for_each(|v| *v *= scale);
        let (gw, gb) = grad[proj..].split_at_mut(s.n_labels * hd);
        outer_add(gw, &dz, &top.hidden[t]);
        for (b, d) in gb.iter_mut().zip(&dz) {
            *b += d;
        }
        gemv_t_add(&mut d_top[t], w_out, &dz);
    }

    let mut d_out = d_top;
    for l in (0..s.layers).rev() {
        let cache_l = &cache.layers[l];
        let layer = params.layer(l);
        let input = layer.input;
        let off = s.layer_offset(l);
        let h4 = 4 * hd;
        let (gw, rest) = grad[off..].split_at_mut(h4 * input);
        let (gu, rest) = rest.split_at_mut(h4 * hd);
        let gb = &mut rest[..h4];

        let mut d_in = vec![vec![0.0; input]; steps];
        let mut dh_next = vec![0.0; hd];
        let mut dc_next = vec![0.0; hd];
        let mut da = vec![0.0; h4];
        let zeros = vec![0.0; hd];
        for t in (0..steps).rev() {
            let a = &cache_l.gates[t];
            let c = &cache_l.cells[t];
            let c_prev = if t > 0 { &cache_l.cells[t - 1] } else { &zeros };
            let h_prev = if t > 0 { &cache_l.hidden[t - 1] } else { &zeros };
            for k in 0..hd {
                let (i, f, g, o) = (a[k], a[hd + k], a[2 * hd + k], a[3 * hd + k]);
                let dh = d_out[t][k] + dh_next[k];
                let tc = c[k].tanh();
                let dc = dh * o * (1.0 - tc * tc) + dc_next[k];
                da[k] = dc * g * i * (1.0 - i);
                da[hd + k] = dc * c_prev[k] * f * (1.0 - f);
                da[2 * hd + k] = dc * i * (1.0 - g * g);
                da[3 * hd + k] = dh * tc * o * (1.0 - o);
                dc_next[k] = match variant {
                    Backward::Exact => dc * f,
                    Backward::DropCellCarry => 0.0,
                };
            }
            outer_add(gw, &da, &cache_l.inputs[t]);
            outer_add(gu, &da, h_prev);
            for (b, d) in gb.iter_mut().zip(&da) {
                *b += d;
            }
            gemv_t_add(&mut d_in[t], layer.w, &da);
            dh_next.fill(0.0);
            gemv_t_add(&mut dh_next, layer.u, &da);
        }
        if let Some(masks) = &cache_l.input_mask {
            for (d, m) in d_in.iter_mut().zip(masks) {
                for (v, k) in d.iter_mut().zip(m) {
                    *v *= k;
                }
            }
        }
        d_out = d_in;
    }
    loss
}

/// Mean cross-entropy of one fully observed sequence, without dropout.
pub fn sequence_loss(params: &LstmParams, inputs: &[Vec<f64>], targets: &[usize]) -> Result<f64, SegmenterError> {
    let cache = forward_cached::<rand_chacha::ChaCha8Rng>(params, inputs, None)?;
    let n = targets.len() as f64;
    Ok(-cache
        .logits
        .iter()
        .zip(targets)
        .map(|(z, &t)| log_softmax_at(z, t))
        .sum::<f64>()
        / n)
}

/// Analytic gradient of [`sequence_loss`].
#[doc(hidden)]
pub fn sequence_gradient(
    params: &LstmParams,
    inputs: &[Vec<f64>],
    targets: &[usize],
    variant: Backward,
) -> Result<(f64, Vec<f64>), SegmenterError> {
    check_targets(params, targets, inputs.len())?;
    let cache = forward_cached::<rand_chacha::ChaCha8Rng>(params, inputs, None)?;
    let mut grad = vec![0.0; params.data.len()];
    let mask = vec![true; targets.len()];
    let loss = accumulate_gradient(params, &cache, targets, &mask, 1.0 / targets.len() as f64, &mut grad, variant);
    Ok((loss, grad))
}

pub(crate) fn check_targets(params: &LstmParams, targets: &[usize], steps: usize) -> Result<(), SegmenterError> {
    if targets.len() != steps {
        return Err(SegmenterError::DimensionMismatch { expected: steps, found: targets.len() });
    }
    if steps == 0 {
        return Err(SegmenterError::EmptyInput);
    }
    if let Some(&bad) = targets.iter().find(|&&t| t >= params.shape.n_labels) {
        return Err(SegmenterError::LabelOutOfRange { label: bad, n_labels: params.shape.n_labels });
    }
    Ok(())
}

/// Largest relative disagreement between the analytic gradient and
/// central finite differences over every parameter:
/// `|g_a - g_n| / max(|g_a|, |g_n|, 1e-8)`.
pub fn gradient_check(
    params: &LstmParams,
    inputs: &[Vec<f64>],
    targets: &[usize],
    epsilon: f64,
) -> Result<f64, SegmenterError> {
    gradient_check_with(params, inputs, targets, epsilon, Backward::Exact)
}

#[doc(hidden)]
pub fn gradient_check_with(
    params: &LstmParams,
    inputs: &[Vec<f64>],
    targets: &[usize],
    epsilon: f64,
    variant: Backward,
) -> Result<f64, SegmenterError> {
    let (_, analytic) = sequence_gradient(params, inputs, targets, variant)?;
    let mut probe = params.clone();
    let mut worst: f64 = 0.0;
    for (i, &ga) in analytic.iter().enumerate() {
        let orig = probe.data[i];
        probe.data[i] = orig + epsilon;
        let up = sequence_loss(&probe, inputs, targets)?;
        probe.data[i] = orig - epsilon;
        let down = sequence_loss(&probe, inputs, targets)?;
        probe.data[i] = orig;
        let gn = (up - down) / (2.0 * epsilon);
        let rel = (ga - gn).abs() / ga.abs().max(gn.abs()).max(1e-8);
        worst = worst.max(rel);
    }
    Ok(worst)
}

/// Index of the largest logit; the lowest index wins ties.
pub fn argmax(logits: &[f64]) -> usize {
    let mut best = 0;
    for (i, &z) in logits.iter().enumerate() {
        if z > logits[best] {
            best = i;
        }
    }
    best
}
