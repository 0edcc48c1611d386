//! Classifiers: extra-trees and random-forest ensembles, the convolutional text model, the
//! conv-features-into-extra-trees hybrid, and the combined build + bag-of-words input.

mod artifact;
mod combined;
mod conv;
mod ensemble;
mod hybrid;
mod tree;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::CodecError;

pub use artifact::{ModelArtifact, ModelFile, ModelKind};
pub use combined::{combine_features, CombinedFeatureVector};
pub use conv::{train_conv, ConvConfig, ConvParams, ConvTextModel, Dense};
pub use ensemble::{train_ensemble, EnsembleConfig, EnsembleMode, MaxFeatures, TreeEnsemble};
pub use hybrid::{train_hybrid, HybridModel};
pub use tree::{DecisionTree, Node};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("no training examples")]
    Empty,
    #[error("{rows} feature rows but {labels} labels")]
    LengthMismatch { rows: usize, labels: usize },
    #[error("row {row} has {got} features, expected {expected}")]
    RaggedRow { row: usize, expected: usize, got: usize },
    #[error("non-finite feature value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("input has {got} features, model expects {expected}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("invalid model config: {0}")]
    Config(String),
    #[error("function id mismatch: build vector for `{build}`, bag of words for `{bow}`")]
    FunctionIdMismatch { build: String, bow: String },
    #[error("model file: {0}")]
    Format(#[from] CodecError),
}

/// How per-class weights are chosen from the training labels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ClassWeighting {
    /// `n / (2 * n_class)`, i.e. inverse prevalence.
    #[default]
    Balanced,
    Uniform,
    Manual {
        negative: f64,
        positive: f64,
    },
}

impl ClassWeighting {
    /// `[negative, positive]` weights for the given labels.
    pub fn resolve(&self, labels: &[bool]) -> [f64; 2] {
        match *self {
            ClassWeighting::Uniform => [1.0, 1.0],
            ClassWeighting::Manual { negative, positive } => [negative, positive],
            ClassWeighting::Balanced => {
                let n = labels.len() as f64;
                let pos = labels.iter().filter(|&&y| y).count();
                let neg = labels.len() - pos;
                let w = |k: usize| if k == 0 { 1.0 } else { n / (2.0 * k as f64) };
                [w(neg), w(pos)]
            }
        }
    }
}
