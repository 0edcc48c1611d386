use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{DecisionTree, SplitSearch, TreeBuilder, TreeParams};
use super::{ClassWeighting, ModelError};
use crate::codec::{ByteReader, ByteWriter, CodecError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleMode {
    /// Whole training set per tree, one random threshold per candidate feature.
    #[default]
    ExtraTrees,
    /// Bootstrap sample per tree, best midpoint threshold per candidate feature.
    RandomForest,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    /// `ceil(sqrt(D))`.
    #[default]
    Sqrt,
    All,
    Count(usize),
}

impl MaxFeatures {
    pub fn resolve(&self, width: usize) -> usize {
        let k = match *self {
            MaxFeatures::Sqrt => (width as f64).sqrt().ceil() as usize,
            MaxFeatures::All => width,
            MaxFeatures::Count(k) => k,
        };
        k.clamp(1, width.max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleConfig {
    pub mode: EnsembleMode,
    pub num_trees: usize,
    pub max_features: MaxFeatures,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub max_depth: Option<usize>,
    pub class_weights: ClassWeighting,
    pub seed: u64,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            mode: EnsembleMode::ExtraTrees,
            num_trees: 100,
            max_features: MaxFeatures::Sqrt,
            min_samples_split: 2,
            min_samples_leaf: 1,
            max_depth: None,
            class_weights: ClassWeighting::Balanced,
            seed: 0,
        }
    }
}

impl EnsembleConfig {
    pub fn random_forest() -> Self {
        Self { mode: EnsembleMode::RandomForest, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: &str| Err(ModelError::Config(m.to_string()));
        if self.num_trees == 0 {
            return bad("num_trees must be positive");
        }
        if self.min_samples_split < 2 {
            return bad("min_samples_split must be at least 2");
        }
        if self.min_samples_leaf == 0 {
            return bad("min_samples_leaf must be positive");
        }
        if let MaxFeatures::Count(0) = self.max_features {
            return bad("max_features must be positive");
        }
        if let ClassWeighting::Manual { negative, positive } = self.class_weights {
            if !(negative.is_finite() && positive.is_finite() && negative >= 0.0 && positive >= 0.0) {
                return bad("class weights must be finite and non-negative");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeEnsemble {
    pub config: EnsembleConfig,
    pub n_features: usize,
    /// Resolved `[negative, positive]` class weights.
    pub class_weights: [f64; 2],
    pub trees: Vec<DecisionTree>,
}

pub(crate) fn check_matrix(x: &[Vec<f64>], labels: usize) -> Result<usize, ModelError> {
    if x.is_empty() {
        return Err(ModelError::Empty);
    }
    if x.len() != labels {
        return Err(ModelError::LengthMismatch { rows: x.len(), labels });
    }
    let width = x[0].len();
    for (row, r) in x.iter().enumerate() {
        if r.len() != width {
            return Err(ModelError::RaggedRow { row, expected: width, got: r.len() });
        }
        if let Some(col) = r.iter().position(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite { row, col });
        }
    }
    Ok(width)
}

/// Fit an ensemble. Tree `i` draws from its own stream seeded with `seed + i`, so the result
/// does not depend on the thread count.
pub fn train_ensemble(x: &[Vec<f64>], y: &[bool], cfg: &EnsembleConfig) -> Result<TreeEnsemble, ModelError> {
    cfg.validate()?;
    let width = check_matrix(x, y.len())?;
    let weights = cfg.class_weights.resolve(y);
    if y.iter().all(|&v| v) || y.iter().all(|&v| !v) {
        log::warn!("training labels are all one class; every tree is a single leaf");
    }
    let params = TreeParams {
        search: match cfg.mode {
            EnsembleMode::ExtraTrees => SplitSearch::Random,
            EnsembleMode::RandomForest => SplitSearch::Exhaustive,
        },
        max_features: cfg.max_features.resolve(width),
        min_samples_split: cfg.min_samples_split,
        min_samples_leaf: cfg.min_samples_leaf,
        max_depth: cfg.max_depth,
        weights,
    };
    let n = x.len();
    let trees = (0..cfg.num_trees)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(i as u64));
            let mut samples: Vec<usize> = match cfg.mode {
                EnsembleMode::ExtraTrees => (0..n).collect(),
                EnsembleMode::RandomForest => {
                    use rand::Rng;
                    (0..n).map(|_| rng.gen_range(0..n)).collect()
                }
            };
            TreeBuilder::new(x, y, &params, rng).build(&mut samples)
        })
        .collect();
    Ok(TreeEnsemble { config: cfg.clone(), n_features: width, class_weights: weights, trees })
}

impl TreeEnsemble {
    /// Mean of per-tree leaf frequencies.
    pub fn predict_proba(&self, x: &[f64]) -> Result<f64, ModelError> {
        if x.len() != self.n_features {
            return Err(ModelError::WidthMismatch { expected: self.n_features, got: x.len() });
        }
        if let Some(col) = x.iter().position(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite { row: 0, col });
        }
        let sum: f64 = self.trees.iter().map(|t| t.predict(x)).sum();
        Ok(sum / self.trees.len() as f64)
    }

    pub fn predict_many(&self, x: &[Vec<f64>]) -> Result<Vec<f64>, ModelError> {
        x.iter()
            .enumerate()
            .map(|(row, r)| {
                self.predict_proba(r).map_err(|e| match e {
                    ModelError::NonFinite { col, .. } => ModelError::NonFinite { row, col },
                    e => e,
                })
            })
            .collect()
    }

    pub(crate) fn write(&self, w: &mut ByteWriter) {
        w.str(&serde_json::to_string(&self.config).expect("config serializes"));
        w.len_u32(self.n_features);
        w.f64(self.class_weights[0]);
        w.f64(self.class_weights[1]);
        w.len_u32(self.trees.len());
        for t in &self.trees {
            t.write(w);
        }
    }

    pub(crate) fn read(r: &mut ByteReader<'_>) -> Result<Self, CodecError> {
        let config: EnsembleConfig = serde_json::from_str(&r.str()?).map_err(|e| CodecError::Invalid(e.to_string()))?;
        let n_features = r.len_u32()?;
        let class_weights = [r.f64()?, r.f64()?];
        let count = r.len_u32()?;
        if count == 0 {
            return Err(CodecError::Invalid("ensemble with no trees".into()));
        }
        let trees = (0..count).map(|_| DecisionTree::read(r, n_features)).collect::<Result<_, _>>()?;
        Ok(Self { config, n_features, class_weights, trees })
    }
}

#[cfg(test)]
mod tests {
    use super::super::tree::Node;
    use super::*;

    fn xor(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<bool>) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for _ in 0..n {
            let a: f64 = rng.gen_range(-1.0..1.0);
            let b: f64 = rng.gen_range(-1.0..1.0);
            x.push(vec![a, b]);
            y.push((a > 0.0) != (b > 0.0));
        }
        (x, y)
    }

    #[test]
    fn identical_labels_single_leaf() {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, (i * 7 % 5) as f64]).collect();
        let y = vec![true; 20];
        let m = train_ensemble(&x, &y, &EnsembleConfig { num_trees: 5, ..Default::default() }).unwrap();
        for t in &m.trees {
            assert_eq!(t.nodes.len(), 1);
        }
        assert_eq!(m.predict_proba(&[100.0, -3.0]).unwrap(), 1.0);
    }

    #[test]
    fn constant_features_give_prior() {
        let x = vec![vec![1.0, 2.0]; 8];
        let y = [true, false, false, false, true, false, false, false];
        for mode in [EnsembleMode::ExtraTrees, EnsembleMode::RandomForest] {
            let cfg =
                EnsembleConfig { num_trees: 3, mode, class_weights: ClassWeighting::Uniform, ..Default::default() };
            let m = train_ensemble(&x, &y, &cfg).unwrap();
            assert!(m.trees.iter().all(|t| t.nodes.len() == 1));
            if mode == EnsembleMode::ExtraTrees {
                assert_eq!(m.predict_proba(&[1.0, 2.0]).unwrap(), 0.25);
            }
        }
    }

    #[test]
    fn xor_training_accuracy() {
        let (x, y) = xor(400, 3);
        for mode in [EnsembleMode::ExtraTrees, EnsembleMode::RandomForest] {
            let cfg = EnsembleConfig { mode, num_trees: 50, seed: 9, ..Default::default() };
            let m = train_ensemble(&x, &y, &cfg).unwrap();
            let p = m.predict_many(&x).unwrap();
            let acc = p.iter().zip(&y).filter(|(p, &y)| (**p >= 0.5) == y).count() as f64 / y.len() as f64;
            assert!(acc >= 0.95, "{mode:?} accuracy {acc}");
        }
    }

    #[test]
    fn averages_trees() {
        let m = TreeEnsemble {
            config: EnsembleConfig::default(),
            n_features: 1,
            class_weights: [1.0, 1.0],
            trees: vec![DecisionTree::leaf([4.0, 1.0]), DecisionTree::leaf([2.0, 3.0])],
        };
        assert!((m.predict_proba(&[0.0]).unwrap() - 0.4).abs() < 1e-15);
        assert!(matches!(m.predict_proba(&[0.0, 1.0]), Err(ModelError::WidthMismatch { .. })));
    }

    #[test]
    fn zero_weights_predict_half() {
        let x = vec![vec![0.0], vec![1.0]];
        let cfg = EnsembleConfig {
            num_trees: 2,
            class_weights: ClassWeighting::Manual { negative: 0.0, positive: 0.0 },
            ..Default::default()
        };
        let m = train_ensemble(&x, &[false, true], &cfg).unwrap();
        assert_eq!(m.predict_proba(&[0.0]).unwrap(), 0.5);
        assert_eq!(m.predict_proba(&[1.0]).unwrap(), 0.5);
    }

    #[test]
    fn non_finite_reports_position() {
        let x = vec![vec![0.0, 1.0], vec![f64::NAN, 0.0]];
        let err = train_ensemble(&x, &[true, false], &EnsembleConfig::default()).unwrap_err();
        assert!(matches!(err, ModelError::NonFinite { row: 1, col: 0 }));
    }

    #[test]
    fn deterministic_and_row_order_free() {
        let (x, y) = xor(100, 5);
        let cfg = EnsembleConfig { num_trees: 10, seed: 4, ..Default::default() };
        let a = train_ensemble(&x, &y, &cfg).unwrap();
        let b = train_ensemble(&x, &y, &cfg).unwrap();
        assert_eq!(a, b);
        let mut xr = x.clone();
        let mut yr = y.clone();
        xr.reverse();
        yr.reverse();
        let c = train_ensemble(&xr, &yr, &cfg).unwrap();
        for r in &x {
            assert_eq!(a.predict_proba(r).unwrap(), c.predict_proba(r).unwrap());
        }
    }

    #[test]
    fn respects_min_leaf_and_depth() {
        let (x, y) = xor(200, 1);
        let cfg = EnsembleConfig { num_trees: 4, min_samples_leaf: 10, max_depth: Some(3), ..Default::default() };
        let m = train_ensemble(&x, &y, &cfg).unwrap();
        for t in &m.trees {
            assert!(t.depth() <= 3);
            for n in &t.nodes {
                if let Node::Leaf { value } = n {
                    let raw = value[0] / m.class_weights[0] + value[1] / m.class_weights[1];
                    assert!(raw >= 9.999, "leaf with {raw} samples");
                }
            }
        }
    }

    #[test]
    fn serialization_round_trip() {
        let (x, y) = xor(60, 2);
        let m = train_ensemble(&x, &y, &EnsembleConfig { num_trees: 3, ..Default::default() }).unwrap();
        let mut w = ByteWriter::new();
        m.write(&mut w);
        let data = w.into_inner();
        let mut r = ByteReader::new(&data);
        assert_eq!(TreeEnsemble::read(&mut r).unwrap(), m);
        r.finish().unwrap();
    }

    #[test]
    fn max_features_resolution() {
        assert_eq!(MaxFeatures::Sqrt.resolve(116), 11);
        assert_eq!(MaxFeatures::Sqrt.resolve(16), 4);
        assert_eq!(MaxFeatures::Count(50).resolve(3), 3);
    }
}
