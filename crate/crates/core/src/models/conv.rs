use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ClassWeighting, ModelError};
use crate::codec::{round_f32, ByteReader, ByteWriter, CodecError};
use crate::embedding::{EmbeddingMatrix, PAD_INDEX, PAD_TOKEN, UNK_INDEX, UNK_TOKEN};
use crate::lexer::TokenSequence;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvConfig {
    pub widths: Vec<usize>,
    /// Filters per width.
    pub filters: usize,
    /// Hidden dense layer sizes; empty means the pooled features feed the output unit directly.
    pub hidden: Vec<usize>,
    pub max_len: usize,
    /// Drop probability on the pooled features.
    pub dropout: f64,
    pub learning_rate: f64,
    pub momentum: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Global gradient-norm clip per step; 0 disables.
    pub max_grad_norm: f64,
    pub fine_tune_embedding: bool,
    pub class_weights: ClassWeighting,
    pub seed: u64,
}

impl Default for ConvConfig {
    fn default() -> Self {
        Self {
            widths: vec![3, 4, 5],
            filters: 128,
            hidden: vec![256],
            max_len: 500,
            dropout: 0.5,
            learning_rate: 0.01,
            momentum: 0.9,
            epochs: 5,
            batch_size: 32,
            max_grad_norm: 5.0,
            fine_tune_embedding: true,
            class_weights: ClassWeighting::Balanced,
            seed: 0,
        }
    }
}

impl ConvConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: String| Err(ModelError::Config(m));
        if self.widths.is_empty() || self.widths.contains(&0) {
            return bad("widths must be a non-empty list of positive sizes".into());
        }
        let widest = *self.widths.iter().max().unwrap();
        if self.max_len < widest {
            return bad(format!("max_len {} is shorter than the widest filter {widest}", self.max_len));
        }
        if self.filters == 0 || self.hidden.contains(&0) {
            return bad("layer sizes must be positive".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout {} outside [0, 1)", self.dropout));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive".into());
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad("momentum must be in [0, 1)".into());
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive".into());
        }
        if self.max_grad_norm.is_nan() || self.max_grad_norm < 0.0 {
            return bad("max_grad_norm must be non-negative".into());
        }
        Ok(())
    }

    pub fn feature_len(&self) -> usize {
        self.filters * self.widths.len()
    }
}

/// Fully connected layer; `weights` is `outputs x inputs`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self { inputs, outputs, weights: vec![0.0; inputs * outputs], bias: vec![0.0; outputs] }
    }

    fn forward(&self, z: &[f64]) -> Vec<f64> {
        (0..self.outputs)
            .map(|o| self.bias[o] + dot(&self.weights[o * self.inputs..(o + 1) * self.inputs], z))
            .collect()
    }
}

/// All trainable tensors. Kernels for width `w` are `filters x w x dim`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvParams {
    pub embedding: Vec<f64>,
    pub kernels: Vec<Vec<f64>>,
    pub conv_bias: Vec<Vec<f64>>,
    pub dense: Vec<Dense>,
}

impl ConvParams {
    fn zeros_like(&self) -> Self {
        Self {
            embedding: vec![0.0; self.embedding.len()],
            kernels: self.kernels.iter().map(|k| vec![0.0; k.len()]).collect(),
            conv_bias: self.conv_bias.iter().map(|b| vec![0.0; b.len()]).collect(),
            dense: self.dense.iter().map(|l| Dense::zeros(l.inputs, l.outputs)).collect(),
        }
    }

    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut v: Vec<&[f64]> = vec![&self.embedding];
        for (k, b) in self.kernels.iter().zip(&self.conv_bias) {
            v.push(k);
            v.push(b);
        }
        for l in &self.dense {
            v.push(&l.weights);
            v.push(&l.bias);
        }
        v
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v: Vec<&mut [f64]> = vec![&mut self.embedding];
        for (k, b) in self.kernels.iter_mut().zip(self.conv_bias.iter_mut()) {
            v.push(k);
            v.push(b);
        }
        for l in &mut self.dense {
            v.push(&mut l.weights);
            v.push(&mut l.bias);
        }
        v
    }
}

/// Gradient with sparse embedding rows.
struct Grad {
    embedding: BTreeMap<usize, Vec<f64>>,
    rest: ConvParams,
}

impl Grad {
    fn zeros(p: &ConvParams) -> Self {
        let mut rest = p.zeros_like();
        rest.embedding = Vec::new();
        Self { embedding: BTreeMap::new(), rest }
    }

    fn add(&mut self, other: Grad) {
        for (row, g) in other.embedding {
            let e = self.embedding.entry(row).or_insert_with(|| vec![0.0; g.len()]);
            axpy(e, 1.0, &g);
        }
        for (a, b) in self.rest.tensors_mut().into_iter().zip(other.rest.tensors()).skip(1) {
            axpy(a, 1.0, b);
        }
    }

    fn scale(&mut self, s: f64) {
        self.embedding.values_mut().for_each(|g| g.iter_mut().for_each(|v| *v *= s));
        self.rest.tensors_mut().into_iter().for_each(|t| t.iter_mut().for_each(|v| *v *= s));
    }

    fn norm_sq(&self) -> f64 {
        let e: f64 = self.embedding.values().flatten().map(|v| v * v).sum();
        e + self.rest.tensors().into_iter().flatten().map(|v| v * v).sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvTextModel {
    config: ConvConfig,
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    dim: usize,
    class_weights: [f64; 2],
    params: ConvParams,
}

struct Trace {
    /// Winning window start per pooled unit; `None` when an all-padding window won.
    argmax: Vec<Option<usize>>,
    /// Pre-activation maximum per pooled unit.
    peak: Vec<f64>,
    /// Inputs to each dense layer.
    inputs: Vec<Vec<f64>>,
    logit: f64,
}

impl ConvTextModel {
    /// New model with the embedding initialized from `init` and other weights drawn from `config.seed`.
    pub fn new(init: &EmbeddingMatrix, config: &ConvConfig, class_weights: [f64; 2]) -> Result<Self, ModelError> {
        config.validate()?;
        let tokens = init.tokens().to_vec();
        let dim = init.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let f = config.filters;
        let kernels = config
            .widths
            .iter()
            .map(|&w| {
                let a = (6.0 / (w * dim) as f64).sqrt();
                (0..f * w * dim).map(|_| rng.gen_range(-a..a)).collect()
            })
            .collect();
        let conv_bias = config.widths.iter().map(|_| vec![0.0; f]).collect();
        let mut sizes = vec![config.feature_len()];
        sizes.extend(&config.hidden);
        sizes.push(1);
        let dense = sizes
            .windows(2)
            .enumerate()
            .map(|(i, s)| {
                let last = i + 2 == sizes.len();
                let a = if last { (6.0 / (s[0] + s[1]) as f64).sqrt() } else { (6.0 / s[0] as f64).sqrt() };
                let mut l = Dense::zeros(s[0], s[1]);
                l.weights.iter_mut().for_each(|v| *v = rng.gen_range(-a..a));
                l
            })
            .collect();
        let mut embedding: Vec<f64> = init.vectors().iter().map(|&v| v as f64).collect();
        embedding[..dim].fill(0.0);
        let params = ConvParams { embedding, kernels, conv_bias, dense };
        Self::from_parts(config.clone(), tokens, dim, class_weights, params)
    }

    /// Assemble a model, checking every tensor shape against the config.
    pub fn from_parts(
        config: ConvConfig,
        tokens: Vec<String>,
        dim: usize,
        class_weights: [f64; 2],
        params: ConvParams,
    ) -> Result<Self, ModelError> {
        config.validate()?;
        let bad = |m: String| Err(ModelError::Config(m));
        if tokens.len() < 2 || tokens[PAD_INDEX] != PAD_TOKEN || tokens[UNK_INDEX] != UNK_TOKEN {
            return bad(format!("vocabulary must start with {PAD_TOKEN} and {UNK_TOKEN}"));
        }
        if dim == 0 || params.embedding.len() != tokens.len() * dim {
            return bad("embedding shape does not match vocabulary".into());
        }
        let f = config.filters;
        if params.kernels.len() != config.widths.len() || params.conv_bias.len() != config.widths.len() {
            return bad("one kernel per width expected".into());
        }
        for (i, &w) in config.widths.iter().enumerate() {
            if params.kernels[i].len() != f * w * dim || params.conv_bias[i].len() != f {
                return bad(format!("kernel shape mismatch for width {w}"));
            }
        }
        let mut sizes = vec![config.feature_len()];
        sizes.extend(&config.hidden);
        sizes.push(1);
        if params.dense.len() != sizes.len() - 1 {
            return bad("dense layer count mismatch".into());
        }
        for (l, s) in params.dense.iter().zip(sizes.windows(2)) {
            if l.inputs != s[0] || l.outputs != s[1] || l.weights.len() != s[0] * s[1] || l.bias.len() != s[1] {
                return bad("dense layer shape mismatch".into());
            }
        }
        if params.tensors().iter().any(|t| t.iter().any(|v| !v.is_finite())) {
            return bad("non-finite parameter".into());
        }
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Ok(Self { config, tokens, index, dim, class_weights, params })
    }

    pub fn config(&self) -> &ConvConfig {
        &self.config
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn class_weights(&self) -> [f64; 2] {
        self.class_weights
    }

    pub fn params(&self) -> &ConvParams {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ConvParams {
        &mut self.params
    }

    pub fn feature_len(&self) -> usize {
        self.config.feature_len()
    }

    /// Row indices, truncated to `max_len`. Unknown tokens (and a literal pad token) map to unk.
    pub fn encode(&self, seq: &TokenSequence) -> Vec<usize> {
        seq.tokens
            .iter()
            .take(self.config.max_len)
            .map(|t| match self.index.get(t.text()) {
                Some(&i) if i != PAD_INDEX => i,
                _ => UNK_INDEX,
            })
            .collect()
    }

    fn row(&self, id: usize) -> &[f64] {
        &self.params.embedding[id * self.dim..(id + 1) * self.dim]
    }

    /// Max-over-time pooling of every filter. Padding rows are zero, so an all-padding window
    /// scores exactly its bias.
    fn pool(&self, ids: &[usize]) -> (Vec<f64>, Vec<Option<usize>>) {
        let (f, d, max_len) = (self.config.filters, self.dim, self.config.max_len);
        let len = ids.len().min(max_len);
        let mut peak = Vec::with_capacity(self.feature_len());
        let mut argmax = Vec::with_capacity(self.feature_len());
        for (wi, &w) in self.config.widths.iter().enumerate() {
            let kernel = &self.params.kernels[wi];
            let bias = &self.params.conv_bias[wi];
            let windows = max_len - w + 1;
            let real = len.min(windows);
            let padded = windows > len;
            for fi in 0..f {
                let k = &kernel[fi * w * d..(fi + 1) * w * d];
                let mut best: Option<(f64, Option<usize>)> = None;
                for s in 0..real {
                    let mut a = bias[fi];
                    for j in 0..w.min(len - s) {
                        a += dot(&k[j * d..(j + 1) * d], self.row(ids[s + j]));
                    }
                    if best.is_none_or(|(b, _)| a > b) {
                        best = Some((a, Some(s)));
                    }
                }
                if padded && best.is_none_or(|(b, _)| bias[fi] > b) {
                    best = Some((bias[fi], None));
                }
                let (a, s) = best.expect("at least one window");
                peak.push(a);
                argmax.push(s);
            }
        }
        (peak, argmax)
    }

    fn forward(&self, ids: &[usize], mask: Option<&[f64]>) -> Trace {
        let (peak, argmax) = self.pool(ids);
        let mut z: Vec<f64> = peak.iter().map(|&a| a.max(0.0)).collect();
        if let Some(m) = mask {
            z.iter_mut().zip(m).for_each(|(v, m)| *v *= m);
        }
        let mut inputs = Vec::with_capacity(self.params.dense.len());
        let last = self.params.dense.len() - 1;
        for (i, layer) in self.params.dense.iter().enumerate() {
            let a = layer.forward(&z);
            inputs.push(std::mem::replace(&mut z, a));
            if i < last {
                z.iter_mut().for_each(|v| *v = v.max(0.0));
            }
        }
        Trace { argmax, peak, inputs, logit: z[0] }
    }

    fn backward(&self, ids: &[usize], mask: Option<&[f64]>, t: &Trace, dlogit: f64, g: &mut Grad) {
        let mut delta = vec![dlogit];
        for (i, layer) in self.params.dense.iter().enumerate().rev() {
            let z = &t.inputs[i];
            let gl = &mut g.rest.dense[i];
            for (o, &d) in delta.iter().enumerate() {
                axpy(&mut gl.weights[o * layer.inputs..(o + 1) * layer.inputs], d, z);
                gl.bias[o] += d;
            }
            let mut prev = vec![0.0; layer.inputs];
            for (o, &d) in delta.iter().enumerate() {
                axpy(&mut prev, d, &layer.weights[o * layer.inputs..(o + 1) * layer.inputs]);
            }
            if i > 0 {
                // z = relu(a) of the previous layer; z > 0 iff a > 0.
                prev.iter_mut().zip(z).for_each(|(p, &z)| {
                    if z <= 0.0 {
                        *p = 0.0
                    }
                });
            }
            delta = prev;
        }
        if let Some(m) = mask {
            delta.iter_mut().zip(m).for_each(|(v, m)| *v *= m);
        }
        let (f, d) = (self.config.filters, self.dim);
        let len = ids.len().min(self.config.max_len);
        for (wi, &w) in self.config.widths.iter().enumerate() {
            for fi in 0..f {
                let u = wi * f + fi;
                if t.peak[u] <= 0.0 || delta[u] == 0.0 {
                    continue;
                }
                let du = delta[u];
                g.rest.conv_bias[wi][fi] += du;
                let Some(s) = t.argmax[u] else { continue };
                let k = &self.params.kernels[wi][fi * w * d..(fi + 1) * w * d];
                for j in 0..w.min(len - s) {
                    let id = ids[s + j];
                    let gk = &mut g.rest.kernels[wi][(fi * w + j) * d..(fi * w + j + 1) * d];
                    axpy(gk, du, self.row(id));
                    let ge = g.embedding.entry(id).or_insert_with(|| vec![0.0; d]);
                    axpy(ge, du, &k[j * d..(j + 1) * d]);
                }
            }
        }
    }

    fn example_loss(&self, logit: f64, label: bool) -> (f64, f64) {
        let y = if label { 1.0 } else { 0.0 };
        let w = self.class_weights[label as usize];
        let softplus = logit.max(0.0) + (-logit.abs()).exp().ln_1p();
        (w * (softplus - y * logit), w * (sigmoid(logit) - y))
    }

    fn batch_grad(&self, batch: &[(&[usize], bool)], masks: Option<&[Vec<f64>]>) -> (f64, Grad) {
        let parts: Vec<(f64, Grad)> = batch
            .par_iter()
            .enumerate()
            .map(|(i, &(ids, label))| {
                let mask = masks.map(|m| m[i].as_slice());
                let t = self.forward(ids, mask);
                let (loss, dlogit) = self.example_loss(t.logit, label);
                let mut g = Grad::zeros(&self.params);
                self.backward(ids, mask, &t, dlogit, &mut g);
                (loss, g)
            })
            .collect();
        let mut total = Grad::zeros(&self.params);
        let mut loss = 0.0;
        for (l, g) in parts {
            loss += l;
            total.add(g);
        }
        let n = batch.len() as f64;
        total.scale(1.0 / n);
        (loss / n, total)
    }

    /// Mean class-weighted cross-entropy over `batch` and its gradient for every tensor. `masks`
    /// are per-example multipliers on the pooled features; `None` disables dropout.
    pub fn loss_and_grad(&self, batch: &[(Vec<usize>, bool)], masks: Option<&[Vec<f64>]>) -> (f64, ConvParams) {
        let view: Vec<(&[usize], bool)> = batch.iter().map(|(ids, y)| (ids.as_slice(), *y)).collect();
        let (loss, g) = self.batch_grad(&view, masks);
        let mut dense = g.rest;
        dense.embedding = vec![0.0; self.params.embedding.len()];
        for (row, v) in g.embedding {
            if row != PAD_INDEX {
                dense.embedding[row * self.dim..(row + 1) * self.dim].copy_from_slice(&v);
            }
        }
        (loss, dense)
    }

    pub fn logit(&self, seq: &TokenSequence) -> f64 {
        self.forward(&self.encode(seq), None).logit
    }

    pub fn predict_proba(&self, seq: &TokenSequence) -> f64 {
        sigmoid(self.logit(seq))
    }

    /// Pooled feature vector of length `filters * widths.len()`, grouped by width.
    pub fn conv_features(&self, seq: &TokenSequence) -> Vec<f64> {
        self.pool(&self.encode(seq)).0.into_iter().map(|a| a.max(0.0)).collect()
    }

    pub(crate) fn write(&self, w: &mut ByteWriter) {
        w.str(&serde_json::to_string(&self.config).expect("config serializes"));
        w.f64(self.class_weights[0]);
        w.f64(self.class_weights[1]);
        w.len_u32(self.dim);
        w.len_u32(self.tokens.len());
        for t in &self.tokens {
            w.str(t);
        }
        for t in self.params.tensors() {
            t.iter().for_each(|&v| w.f32(v as f32));
        }
    }

    pub(crate) fn read(r: &mut ByteReader<'_>) -> Result<Self, CodecError> {
        let config: ConvConfig = serde_json::from_str(&r.str()?).map_err(|e| CodecError::Invalid(e.to_string()))?;
        config.validate().map_err(|e| CodecError::Invalid(e.to_string()))?;
        let class_weights = [r.f64()?, r.f64()?];
        let dim = r.len_u32()?;
        let n = r.len_u32()?;
        let tokens = (0..n).map(|_| r.str()).collect::<Result<Vec<_>, _>>()?;
        let f = config.filters;
        let embedding = r.f32_vec(n * dim)?;
        let mut kernels = Vec::new();
        let mut conv_bias = Vec::new();
        for &w in &config.widths {
            kernels.push(r.f32_vec(f * w * dim)?);
            conv_bias.push(r.f32_vec(f)?);
        }
        let mut sizes = vec![config.feature_len()];
        sizes.extend(&config.hidden);
        sizes.push(1);
        let mut dense = Vec::new();
        for s in sizes.windows(2) {
            let weights = r.f32_vec(s[0] * s[1])?;
            let bias = r.f32_vec(s[1])?;
            dense.push(Dense { inputs: s[0], outputs: s[1], weights, bias });
        }
        let params = ConvParams { embedding, kernels, conv_bias, dense };
        Self::from_parts(config, tokens, dim, class_weights, params).map_err(|e| CodecError::Invalid(e.to_string()))
    }
}

/// Train with momentum SGD over shuffled mini-batches. Parameters are rounded to `f32` at the
/// end so a saved model reloads bit-identically.
pub fn train_conv(
    sequences: &[TokenSequence],
    labels: &[bool],
    init: &EmbeddingMatrix,
    config: &ConvConfig,
) -> Result<ConvTextModel, ModelError> {
    if sequences.is_empty() {
        return Err(ModelError::Empty);
    }
    if sequences.len() != labels.len() {
        return Err(ModelError::LengthMismatch { rows: sequences.len(), labels: labels.len() });
    }
    let weights = config.class_weights.resolve(labels);
    let mut model = ConvTextModel::new(init, config, weights)?;
    let encoded: Vec<Vec<usize>> = sequences.iter().map(|s| model.encode(s)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let mut velocity = model.params.zeros_like();
    let mut order: Vec<usize> = (0..encoded.len()).collect();
    let keep = 1.0 - config.dropout;
    let width = model.feature_len();
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<(&[usize], bool)> = chunk.iter().map(|&i| (encoded[i].as_slice(), labels[i])).collect();
            let masks: Option<Vec<Vec<f64>>> = (config.dropout > 0.0).then(|| {
                chunk
                    .iter()
                    .map(|_| (0..width).map(|_| if rng.gen::<f64>() < keep { 1.0 / keep } else { 0.0 }).collect())
                    .collect()
            });
            let (loss, mut g) = model.batch_grad(&batch, masks.as_deref());
            epoch_loss += loss * chunk.len() as f64;
            if config.max_grad_norm > 0.0 {
                let norm = g.norm_sq().sqrt();
                if norm > config.max_grad_norm {
                    g.scale(config.max_grad_norm / norm);
                }
            }
            step(&mut model, &mut velocity, g, config);
        }
        log::debug!("conv epoch {epoch}: mean loss {:.6}", epoch_loss / encoded.len() as f64);
    }
    let dim = model.dim;
    model.params.embedding[..dim].fill(0.0);
    model.params.tensors_mut().into_iter().for_each(round_f32);
    Ok(model)
}

fn step(model: &mut ConvTextModel, velocity: &mut ConvParams, g: Grad, cfg: &ConvConfig) {
    let (lr, mu, d) = (cfg.learning_rate, cfg.momentum, model.dim);
    let params = model.params.tensors_mut().into_iter().skip(1);
    let vels = velocity.tensors_mut().into_iter().skip(1);
    for ((p, v), g) in params.zip(vels).zip(g.rest.tensors().into_iter().skip(1)) {
        for ((p, v), g) in p.iter_mut().zip(v.iter_mut()).zip(g) {
            *v = mu * *v - lr * g;
            *p += *v;
        }
    }
    if !cfg.fine_tune_embedding {
        return;
    }
    velocity.embedding[d..].iter_mut().for_each(|v| *v *= mu);
    for (row, g) in g.embedding {
        if row != PAD_INDEX {
            axpy(&mut velocity.embedding[row * d..(row + 1) * d], -lr, &g);
        }
    }
    axpy(&mut model.params.embedding[d..], 1.0, &velocity.embedding[d..]);
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    y.iter_mut().zip(x).for_each(|(y, x)| *y += a * x);
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}
