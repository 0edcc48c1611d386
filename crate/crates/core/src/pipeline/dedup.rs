use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{DatasetManifest, LabeledExample, PipelineError};
use crate::irfeat::BuildFeatureVector;
use crate::lexer::TokenSequence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "camelCase")]
pub enum DedupPolicy {
    /// Duplicate iff the lexed token text matches.
    #[default]
    SourceOnly,
    /// Duplicate iff the lexed token text or the build feature bytes match.
    SourceOrBuild,
}

impl DedupPolicy {
    pub fn name(self) -> &'static str {
        match self {
            DedupPolicy::SourceOnly => "sourceOnly",
            DedupPolicy::SourceOrBuild => "sourceOrBuild",
        }
    }
}

impl std::str::FromStr for DedupPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "sourceOnly" => Ok(DedupPolicy::SourceOnly),
            "sourceOrBuild" => Ok(DedupPolicy::SourceOrBuild),
            _ => Err(format!("unknown dedup policy `{s}`")),
        }
    }
}

/// SHA-256 hex of the canonical token text. The function id is not part of the key.
pub fn dedup_key(seq: &TokenSequence) -> String {
    hex::encode(Sha256::digest(seq.canonical_text().as_bytes()))
}

pub fn build_key(v: &BuildFeatureVector) -> String {
    hex::encode(Sha256::digest(v.to_bytes()))
}

/// Drop later duplicates, keeping the first occurrence in input order.
pub fn deduplicate(examples: Vec<LabeledExample>, policy: DedupPolicy) -> Result<DatasetManifest, PipelineError> {
    let mut seen_src = HashSet::new();
    let mut seen_build = HashSet::new();
    let mut kept = Vec::with_capacity(examples.len());
    let mut removed = 0;
    for ex in examples {
        let src = ex.tokens.as_ref().map(dedup_key);
        let build = match policy {
            DedupPolicy::SourceOrBuild => ex.build.as_ref().map(build_key),
            DedupPolicy::SourceOnly => None,
        };
        if src.is_none() && (policy == DedupPolicy::SourceOnly || build.is_none()) {
            return Err(PipelineError::MissingFeatures(ex.function_id.to_string()));
        }
        let dup = src.as_ref().is_some_and(|k| seen_src.contains(k))
            || build.as_ref().is_some_and(|k| seen_build.contains(k));
        if dup {
            removed += 1;
            continue;
        }
        seen_src.extend(src);
        seen_build.extend(build);
        kept.push(ex);
    }
    if removed > 0 {
        log::info!("removed {removed} duplicate functions");
    }
    Ok(DatasetManifest { examples: kept, policy, removed })
}
