//! Dataset construction: analyzer findings to binary function labels, duplicate removal, and
//! seeded train/validation/test splits.

mod dedup;
mod findings;
mod label;
mod manifest;
mod split;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::irfeat::BuildFeatureVector;
use crate::lexer::{FunctionId, TokenSequence};

pub use dedup::{build_key, dedup_key, deduplicate, DedupPolicy};
pub use findings::{checker_allowed, ingest_findings, read_findings, read_findings_files, Finding, DEFAULT_CHECKERS};
pub use label::{label_functions, normalize_path, FunctionSpan, Labeling};
pub use manifest::{counts_tsv, DatasetManifest, ManifestFile, ManifestRecord, SplitCounts};
pub use split::{split, split_sizes, DEFAULT_FRACTIONS};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("findings line {line}: {message}")]
    Finding { line: usize, message: String },
    #[error("manifest line {line}: {message}")]
    Manifest { line: usize, message: String },
    #[error("example `{0}` lacks the features the dedup policy needs")]
    MissingFeatures(String),
    #[error("invalid split fractions: {0}")]
    Fractions(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Good,
    Buggy,
}

impl Label {
    pub fn from_bool(buggy: bool) -> Self {
        if buggy {
            Label::Buggy
        } else {
            Label::Good
        }
    }

    pub fn is_buggy(self) -> bool {
        self == Label::Buggy
    }
}

/// Serialized as `0` (good) or `1` (buggy).
impl Serialize for Label {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(self.is_buggy() as u8)
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match u8::deserialize(d)? {
            0 => Ok(Label::Good),
            1 => Ok(Label::Buggy),
            v => Err(serde::de::Error::custom(format!("label must be 0 or 1, got {v}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Valid,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Valid, Split::Test];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Valid => "valid",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Split::ALL.into_iter().find(|x| x.name() == s).ok_or_else(|| format!("unknown split `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
#[serde(rename_all = "camelCase")]
pub enum DatasetKind {
    DebianLike,
    #[default]
    GithubLike,
    Combined,
}

impl DatasetKind {
    pub fn name(self) -> &'static str {
        match self {
            DatasetKind::DebianLike => "debianLike",
            DatasetKind::GithubLike => "githubLike",
            DatasetKind::Combined => "combined",
        }
    }
}

impl FromStr for DatasetKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        [DatasetKind::DebianLike, DatasetKind::GithubLike, DatasetKind::Combined]
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| format!("unknown dataset kind `{s}`"))
    }
}

/// One function with its features, label and provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledExample {
    pub function_id: FunctionId,
    pub tokens: Option<TokenSequence>,
    pub build: Option<BuildFeatureVector>,
    pub label: Label,
    /// Assigned by [`split`].
    pub split: Option<Split>,
    pub dataset: DatasetKind,
}

impl LabeledExample {
    pub fn new(function_id: FunctionId, label: Label, dataset: DatasetKind) -> Self {
        Self { function_id, tokens: None, build: None, label, split: None, dataset }
    }

    pub fn with_tokens(mut self, tokens: TokenSequence) -> Self {
        self.tokens = Some(tokens);
        self
    }

    pub fn with_build(mut self, build: BuildFeatureVector) -> Self {
        self.build = Some(build);
        self
    }
}
