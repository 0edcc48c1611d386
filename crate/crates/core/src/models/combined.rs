use super::ModelError;
use crate::embedding::BagOfWordsVector;
use crate::irfeat::{BuildFeatureVector, BUILD_VECTOR_LEN};
use crate::lexer::FunctionId;

/// Build features followed by bag-of-words counts for the same function.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinedFeatureVector {
    pub values: Vec<f64>,
}

impl CombinedFeatureVector {
    pub fn build_part(&self) -> &[f64] {
        &self.values[..BUILD_VECTOR_LEN]
    }

    pub fn bow_part(&self) -> &[f64] {
        &self.values[BUILD_VECTOR_LEN..]
    }
}

pub fn combine_features(
    build_id: &FunctionId,
    build: &BuildFeatureVector,
    bow_id: &FunctionId,
    bow: &BagOfWordsVector,
) -> Result<CombinedFeatureVector, ModelError> {
    if build_id != bow_id {
        return Err(ModelError::FunctionIdMismatch {
            build: build_id.as_str().to_string(),
            bow: bow_id.as_str().to_string(),
        });
    }
    let mut values = build.values().to_vec();
    values.extend(bow.to_f64());
    Ok(CombinedFeatureVector { values })
}
