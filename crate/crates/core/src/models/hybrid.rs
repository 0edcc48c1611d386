use super::conv::{train_conv, ConvConfig, ConvTextModel};
use super::ensemble::{train_ensemble, EnsembleConfig, TreeEnsemble};
use super::ModelError;
use crate::embedding::EmbeddingMatrix;
use crate::lexer::TokenSequence;

/// A trained convolutional model frozen as a feature extractor for an extra-trees classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridModel {
    pub conv: ConvTextModel,
    pub ensemble: TreeEnsemble,
}

impl HybridModel {
    pub fn features(&self, seq: &TokenSequence) -> Vec<f64> {
        self.conv.conv_features(seq)
    }

    pub fn predict_proba(&self, seq: &TokenSequence) -> Result<f64, ModelError> {
        self.ensemble.predict_proba(&self.features(seq))
    }
}

pub fn train_hybrid(
    sequences: &[TokenSequence],
    labels: &[bool],
    init: &EmbeddingMatrix,
    conv: &ConvConfig,
    trees: &EnsembleConfig,
) -> Result<HybridModel, ModelError> {
    let conv = train_conv(sequences, labels, init, conv)?;
    let x: Vec<Vec<f64>> = sequences.iter().map(|s| conv.conv_features(s)).collect();
    let ensemble = train_ensemble(&x, labels, trees)?;
    Ok(HybridModel { conv, ensemble })
}
