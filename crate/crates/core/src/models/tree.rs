use rand::seq::SliceRandom;
use rand::Rng;

use crate::codec::{ByteReader, ByteWriter, CodecError};

/// Tree node in pre-order storage. Samples with `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    /// Class-weighted sample totals `[negative, positive]`.
    Leaf {
        value: [f64; 2],
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn leaf(value: [f64; 2]) -> Self {
        Self { nodes: vec![Node::Leaf { value }] }
    }

    /// Positive-class frequency of the leaf reached by `x`.
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Split { feature, threshold, left, right } => {
                    i = if x[feature] <= threshold { left } else { right };
                }
                Node::Leaf { value: [neg, pos] } => {
                    let total = neg + pos;
                    return if total > 0.0 { pos / total } else { 0.5 };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Split { left, right, .. } => 1 + go(nodes, left).max(go(nodes, right)),
                Node::Leaf { .. } => 0,
            }
        }
        go(&self.nodes, 0)
    }

    pub(crate) fn write(&self, w: &mut ByteWriter) {
        w.len_u32(self.nodes.len());
        for n in &self.nodes {
            match *n {
                Node::Leaf { value } => {
                    w.u8(0);
                    w.f64(value[0]);
                    w.f64(value[1]);
                }
                Node::Split { feature, threshold, .. } => {
                    w.u8(1);
                    w.len_u32(feature);
                    w.f64(threshold);
                }
            }
        }
    }

    pub(crate) fn read(r: &mut ByteReader<'_>, n_features: usize) -> Result<Self, CodecError> {
        let count = r.len_u32()?;
        let mut raw = Vec::with_capacity(count.min(1 << 20));
        for _ in 0..count {
            raw.push(match r.u8()? {
                0 => Node::Leaf { value: [r.f64()?, r.f64()?] },
                1 => {
                    let feature = r.len_u32()?;
                    if feature >= n_features {
                        return Err(CodecError::Invalid(format!("split on feature {feature}")));
                    }
                    Node::Split { feature, threshold: r.f64()?, left: 0, right: 0 }
                }
                t => return Err(CodecError::Invalid(format!("unknown node tag {t}"))),
            });
        }
        // Recover child links from pre-order layout.
        fn link(nodes: &mut [Node], i: usize) -> Result<usize, CodecError> {
            if i >= nodes.len() {
                return Err(CodecError::Invalid("truncated tree".into()));
            }
            match nodes[i] {
                Node::Leaf { .. } => Ok(i + 1),
                Node::Split { .. } => {
                    let left = i + 1;
                    let right = link(nodes, left)?;
                    let end = link(nodes, right)?;
                    if let Node::Split { left: l, right: r, .. } = &mut nodes[i] {
                        *l = left;
                        *r = right;
                    }
                    Ok(end)
                }
            }
        }
        if link(&mut raw, 0)? != raw.len() {
            return Err(CodecError::Invalid("extra nodes after tree".into()));
        }
        Ok(Self { nodes: raw })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum SplitSearch {
    /// One uniform threshold per candidate feature.
    Random,
    /// Every midpoint between distinct sorted values.
    Exhaustive,
}

pub(crate) struct TreeParams {
    pub search: SplitSearch,
    pub max_features: usize,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub max_depth: Option<usize>,
    pub weights: [f64; 2],
}

pub(crate) struct TreeBuilder<'a, R> {
    pub x: &'a [Vec<f64>],
    pub y: &'a [bool],
    pub params: &'a TreeParams,
    pub rng: R,
    nodes: Vec<Node>,
    features: Vec<usize>,
}

fn counts(y: &[bool], samples: &[usize]) -> [usize; 2] {
    let pos = samples.iter().filter(|&&i| y[i]).count();
    [samples.len() - pos, pos]
}

impl<'a, R: Rng> TreeBuilder<'a, R> {
    pub fn new(x: &'a [Vec<f64>], y: &'a [bool], params: &'a TreeParams, rng: R) -> Self {
        let width = x.first().map_or(0, Vec::len);
        Self { x, y, params, rng, nodes: Vec::new(), features: (0..width).collect() }
    }

    pub fn build(mut self, samples: &mut [usize]) -> DecisionTree {
        self.grow(samples, 0);
        DecisionTree { nodes: self.nodes }
    }

    fn weighted(&self, c: [usize; 2]) -> [f64; 2] {
        [c[0] as f64 * self.params.weights[0], c[1] as f64 * self.params.weights[1]]
    }

    /// Weighted Gini proxy to maximize: `Σ_side (Σ_c w_c²) / w_side`.
    fn split_score(&self, left: [usize; 2], right: [usize; 2]) -> f64 {
        let side = |c: [usize; 2]| {
            let [a, b] = self.weighted(c);
            let t = a + b;
            if t > 0.0 {
                (a * a + b * b) / t
            } else {
                0.0
            }
        };
        side(left) + side(right)
    }

    fn grow(&mut self, samples: &mut [usize], depth: usize) -> usize {
        let c = counts(self.y, samples);
        let id = self.nodes.len();
        let p = self.params;
        let stop = c[0] == 0
            || c[1] == 0
            || samples.len() < p.min_samples_split
            || samples.len() < 2 * p.min_samples_leaf
            || p.max_depth.is_some_and(|d| depth >= d);
        let split = if stop { None } else { self.find_split(samples, c) };
        let Some((feature, threshold)) = split else {
            self.nodes.push(Node::Leaf { value: self.weighted(c) });
            return id;
        };
        self.nodes.push(Node::Split { feature, threshold, left: 0, right: 0 });
        let x = self.x;
        let mid = partition(samples, |&i| x[i][feature] <= threshold);
        let (l, r) = samples.split_at_mut(mid);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        if let Node::Split { left: a, right: b, .. } = &mut self.nodes[id] {
            *a = left;
            *b = right;
        }
        id
    }

    /// Visit features in random order until `max_features` non-constant ones were evaluated.
    fn find_split(&mut self, samples: &[usize], total: [usize; 2]) -> Option<(usize, f64)> {
        let mut order = std::mem::take(&mut self.features);
        order.shuffle(&mut self.rng);
        let mut best: Option<(f64, usize, f64)> = None;
        let mut evaluated = 0;
        for &f in &order {
            if evaluated >= self.params.max_features {
                break;
            }
            let (lo, hi) = samples.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                let v = self.x[i][f];
                (lo.min(v), hi.max(v))
            });
            if lo >= hi {
                continue;
            }
            evaluated += 1;
            let cand = match self.params.search {
                SplitSearch::Random => self.random_threshold(samples, f, lo, hi, total),
                SplitSearch::Exhaustive => self.best_threshold(samples, f, total),
            };
            if let Some((score, t)) = cand {
                if best.is_none_or(|(b, _, _)| score > b) {
                    best = Some((score, f, t));
                }
            }
        }
        self.features = order;
        best.map(|(_, f, t)| (f, t))
    }

    fn random_threshold(
        &mut self,
        samples: &[usize],
        f: usize,
        lo: f64,
        hi: f64,
        total: [usize; 2],
    ) -> Option<(f64, f64)> {
        let t = self.rng.gen_range(lo..hi);
        let mut left = [0usize; 2];
        for &i in samples {
            if self.x[i][f] <= t {
                left[self.y[i] as usize] += 1;
            }
        }
        let right = [total[0] - left[0], total[1] - left[1]];
        let min_leaf = self.params.min_samples_leaf;
        if left[0] + left[1] < min_leaf || right[0] + right[1] < min_leaf {
            return None;
        }
        Some((self.split_score(left, right), t))
    }

    fn best_threshold(&self, samples: &[usize], f: usize, total: [usize; 2]) -> Option<(f64, f64)> {
        let mut sorted: Vec<(f64, bool)> = samples.iter().map(|&i| (self.x[i][f], self.y[i])).collect();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let min_leaf = self.params.min_samples_leaf;
        let mut left = [0usize; 2];
        let mut best: Option<(f64, f64)> = None;
        for k in 0..sorted.len() - 1 {
            left[sorted[k].1 as usize] += 1;
            let (a, b) = (sorted[k].0, sorted[k + 1].0);
            if a == b {
                continue;
            }
            let n_left = k + 1;
            if n_left < min_leaf || sorted.len() - n_left < min_leaf {
                continue;
            }
            let right = [total[0] - left[0], total[1] - left[1]];
            let score = self.split_score(left, right);
            if best.is_none_or(|(s, _)| score > s) {
                let mid = a + (b - a) / 2.0;
                best = Some((score, if mid < b { mid } else { a }));
            }
        }
        best
    }
}

/// Reorder so elements satisfying `pred` come first; returns their count.
fn partition<T, F: Fn(&T) -> bool>(v: &mut [T], pred: F) -> usize {
    let mut k = 0;
    for i in 0..v.len() {
        if pred(&v[i]) {
            v.swap(i, k);
            k += 1;
        }
    }
    k
}
