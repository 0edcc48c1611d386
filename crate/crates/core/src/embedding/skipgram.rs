use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::lexer::TokenSequence;

use super::{EmbeddingError, EmbeddingMatrix, Vocabulary, PAD_INDEX};

/// Skip-gram training hyperparameters. Stored alongside trained matrices as training metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SkipGramConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    /// Initial step size, decayed linearly to 1e-4 of its value over training.
    pub learning_rate: f64,
    pub seed: u64,
    /// Frequent-token subsampling threshold; 0 disables subsampling.
    pub subsample: f64,
}

impl Default for SkipGramConfig {
    fn default() -> Self {
        Self { dim: 64, window: 5, negatives: 5, epochs: 5, learning_rate: 0.025, seed: 0, subsample: 0.0 }
    }
}

impl SkipGramConfig {
    pub fn validate(&self) -> Result<(), EmbeddingError> {
        let bad = |m: &str| Err(EmbeddingError::Config(m.to_string()));
        if self.dim == 0 {
            return bad("embedding dimension must be positive");
        }
        if self.window == 0 {
            return bad("window must be positive");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning rate must be positive and finite");
        }
        if !(self.subsample.is_finite() && self.subsample >= 0.0) {
            return bad("subsample threshold must be non-negative");
        }
        Ok(())
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

fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Negative-sampling loss of one (center, context) pair:
/// `-log σ(u_ctx·v) - Σ_k log σ(-u_k·v)`.
pub fn pair_loss(center: &[f64], context: &[f64], negatives: &[&[f64]]) -> f64 {
    let mut loss = -log_sigmoid(dot(center, context));
    for n in negatives {
        loss -= log_sigmoid(-dot(center, n));
    }
    loss
}

/// Derivative of [`pair_loss`] with respect to each score `u·v`: `σ(s) - label`.
fn score_coefficients(center: &[f64], targets: &[&[f64]]) -> Vec<f64> {
    targets.iter().enumerate().map(|(k, u)| sigmoid(dot(center, u)) - if k == 0 { 1.0 } else { 0.0 }).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairGradient {
    pub center: Vec<f64>,
    pub context: Vec<f64>,
    pub negatives: Vec<Vec<f64>>,
}

pub fn pair_loss_grad(center: &[f64], context: &[f64], negatives: &[&[f64]]) -> (f64, PairGradient) {
    let mut targets = vec![context];
    targets.extend_from_slice(negatives);
    let coefs = score_coefficients(center, &targets);
    let mut g_center = vec![0.0; center.len()];
    for (c, u) in coefs.iter().zip(&targets) {
        for (g, x) in g_center.iter_mut().zip(u.iter()) {
            *g += c * x;
        }
    }
    let scale = |c: f64| center.iter().map(|x| c * x).collect::<Vec<_>>();
    let grad = PairGradient {
        center: g_center,
        context: scale(coefs[0]),
        negatives: coefs[1..].iter().map(|&c| scale(c)).collect(),
    };
    (pair_loss(center, context, negatives), grad)
}

/// Draws token indices with probability proportional to `count^power`.
#[derive(Debug, Clone)]
pub struct NegativeSampler {
    cumulative: Vec<f64>,
}

impl NegativeSampler {
    pub fn new(counts: &[u64], power: f64) -> Self {
        let mut acc = 0.0;
        let cumulative = counts
            .iter()
            .map(|&c| {
                acc += (c as f64).powf(power);
                acc
            })
            .collect();
        Self { cumulative }
    }

    pub fn total_weight(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    pub fn probabilities(&self) -> Vec<f64> {
        let total = self.total_weight();
        let mut prev = 0.0;
        self.cumulative
            .iter()
            .map(|&c| {
                let p = (c - prev) / total;
                prev = c;
                p
            })
            .collect()
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        let u = rng.gen::<f64>() * self.total_weight();
        self.cumulative.partition_point(|&c| c <= u).min(self.cumulative.len() - 1)
    }
}

/// Train skip-gram embeddings with negative sampling, one function per sentence.
///
/// Single-threaded; the same corpus, vocabulary and config always give the same matrix.
pub fn train_embedding(
    corpus: &[TokenSequence],
    vocab: &Vocabulary,
    cfg: &SkipGramConfig,
) -> Result<EmbeddingMatrix, EmbeddingError> {
    cfg.validate()?;
    let v = vocab.len();
    let d = cfg.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut input = vec![0.0f64; v * d];
    for (row, chunk) in input.chunks_mut(d).enumerate() {
        if row != PAD_INDEX {
            for x in chunk {
                *x = (rng.gen::<f64>() - 0.5) / d as f64;
            }
        }
    }
    let mut output = vec![0.0f64; v * d];

    let sentences: Vec<Vec<usize>> = corpus.iter().map(|s| vocab.encode(s)).collect();
    let total_tokens: usize = sentences.iter().map(Vec::len).sum();
    let sampler = NegativeSampler::new(vocab.counts(), 0.75);
    let corpus_count: u64 = vocab.counts().iter().sum();

    let schedule_len = (cfg.epochs * total_tokens) as f64 + 1.0;
    let mut processed = 0usize;
    let mut center = vec![0.0f64; d];
    let mut grad_center = vec![0.0f64; d];
    let mut targets: Vec<usize> = Vec::with_capacity(cfg.negatives + 1);

    if sampler.total_weight() > 0.0 {
        for _ in 0..cfg.epochs {
            for sent in &sentences {
                let kept: Vec<usize> = if cfg.subsample > 0.0 {
                    sent.iter()
                        .copied()
                        .filter(|&w| {
                            let f = vocab.count(w) as f64;
                            let t = cfg.subsample * corpus_count as f64;
                            let keep = ((f / t).sqrt() + 1.0) * t / f;
                            keep >= 1.0 || rng.gen::<f64>() < keep
                        })
                        .collect()
                } else {
                    sent.clone()
                };
                for (pos, &word) in kept.iter().enumerate() {
                    let lr = cfg.learning_rate * (1.0 - processed as f64 / schedule_len).max(1e-4);
                    processed += 1;
                    let lo = pos.saturating_sub(cfg.window);
                    let hi = (pos + cfg.window + 1).min(kept.len());
                    for (cpos, &ctx) in kept.iter().enumerate().take(hi).skip(lo) {
                        if cpos == pos {
                            continue;
                        }
                        targets.clear();
                        targets.push(ctx);
                        for _ in 0..cfg.negatives {
                            let n = sampler.sample(&mut rng);
                            if n != ctx {
                                targets.push(n);
                            }
                        }
                        center.copy_from_slice(&input[word * d..(word + 1) * d]);
                        let rows: Vec<&[f64]> = targets.iter().map(|&t| &output[t * d..(t + 1) * d]).collect();
                        let coefs = score_coefficients(&center, &rows);
                        grad_center.iter_mut().for_each(|g| *g = 0.0);
                        for (c, u) in coefs.iter().zip(&rows) {
                            for (g, x) in grad_center.iter_mut().zip(u.iter()) {
                                *g += c * x;
                            }
                        }
                        for (&t, c) in targets.iter().zip(&coefs) {
                            let row = &mut output[t * d..(t + 1) * d];
                            for (u, x) in row.iter_mut().zip(&center) {
                                *u -= lr * c * x;
                            }
                        }
                        let row = &mut input[word * d..(word + 1) * d];
                        for (x, g) in row.iter_mut().zip(&grad_center) {
                            *x -= lr * g;
                        }
                    }
                }
            }
        }
    }

    let vectors: Vec<f32> = input.iter().map(|&x| x as f32).collect();
    let mut m = EmbeddingMatrix::new(vocab.tokens().to_vec(), d, vectors)?;
    m.meta = Some(cfg.clone());
    Ok(m)
}
