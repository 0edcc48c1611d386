//! Experiment configuration: one TOML file plus flag overrides.

use std::path::{Path, PathBuf};

use anyhow::Context;
use bugsift::embedding::SkipGramConfig;
use bugsift::lexer::LexerConfig;
use bugsift::models::{ConvConfig, EnsembleConfig};
use bugsift::pipeline::{DatasetKind, DedupPolicy, DEFAULT_CHECKERS, DEFAULT_FRACTIONS};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::UsageError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Source roots; function ids use paths relative to their root.
    pub corpus: Vec<PathBuf>,
    /// JSON-lines analyzer findings, paths relative to the corpus root.
    pub findings: Option<PathBuf>,
    /// Directory of `.tir` files mirroring the corpus layout.
    pub ir: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VocabConfig {
    pub min_count: u64,
}

impl Default for VocabConfig {
    fn default() -> Self {
        Self { min_count: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub policy: DedupPolicy,
    pub fractions: [f64; 3],
    pub kind: DatasetKind,
    /// Checker allowlist; an empty list keeps every finding.
    pub checkers: Vec<String>,
    pub revision: Option<String>,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            policy: DedupPolicy::SourceOnly,
            fractions: DEFAULT_FRACTIONS,
            kind: DatasetKind::GithubLike,
            checkers: DEFAULT_CHECKERS.iter().map(|s| s.to_string()).collect(),
            revision: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Applies to every stage; per-stage `seed` fields are overwritten with it.
    pub seed: Option<u64>,
    pub paths: Paths,
    pub lexer: LexerConfig,
    pub vocab: VocabConfig,
    pub embedding: SkipGramConfig,
    pub conv: ConvConfig,
    /// Classifier for `bow-et` and `cnn-et`.
    pub extra_trees: EnsembleConfig,
    /// Classifier for `build-rf`.
    pub random_forest: EnsembleConfig,
    /// Classifier for `combined`.
    pub combined: EnsembleConfig,
    pub dataset: DatasetConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: None,
            paths: Paths::default(),
            lexer: LexerConfig::default(),
            vocab: VocabConfig::default(),
            embedding: SkipGramConfig::default(),
            conv: ConvConfig::default(),
            extra_trees: EnsembleConfig::default(),
            random_forest: EnsembleConfig::random_forest(),
            combined: EnsembleConfig::random_forest(),
            dataset: DatasetConfig::default(),
        }
    }
}

/// A validated config with resolved paths.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub seed: u64,
    pub corpus: Vec<PathBuf>,
    pub findings: Option<PathBuf>,
    pub ir: Option<PathBuf>,
    pub out: PathBuf,
    pub hash: String,
}

fn usage(msg: String) -> anyhow::Error {
    UsageError(msg).into()
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        toml::from_str(text).map_err(|e| usage(format!("invalid config: {e}")))
    }

    /// Hash of everything that affects artifact contents. The output directory is excluded.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.paths.out = None;
        let json = serde_json::to_string(&c).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    fn apply_seed(&mut self, seed: u64) {
        self.seed = Some(seed);
        self.embedding.seed = seed;
        self.conv.seed = seed;
        self.extra_trees.seed = seed;
        self.random_forest.seed = seed;
        self.combined.seed = seed;
    }

    fn validate(&self) -> anyhow::Result<()> {
        let fail = |e: &dyn std::fmt::Display| usage(format!("invalid config: {e}"));
        self.embedding.validate().map_err(|e| fail(&e))?;
        self.conv.validate().map_err(|e| fail(&e))?;
        for t in [&self.extra_trees, &self.random_forest, &self.combined] {
            t.validate().map_err(|e| fail(&e))?;
        }
        bugsift::pipeline::split_sizes(0, self.dataset.fractions).map_err(|e| fail(&e))?;
        if self.vocab.min_count == 0 {
            return Err(usage("invalid config: vocab.min_count must be at least 1".into()));
        }
        Ok(())
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl Experiment {
    /// Load `config_path` (or defaults), apply overrides, check the seed and every configured path.
    pub fn load(config_path: Option<&Path>, seed: Option<u64>, out: Option<&Path>) -> anyhow::Result<Self> {
        let (mut config, base) = match config_path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| usage(format!("cannot read config {}: {e}", p.display())))?;
                let base = p.parent().map(Path::to_path_buf).unwrap_or_default();
                (ExperimentConfig::from_toml(&text)?, base)
            }
            None => (ExperimentConfig::default(), PathBuf::new()),
        };
        let seed = seed
            .or(config.seed)
            .ok_or_else(|| usage("a seed is required: set `seed` in the config or pass --seed".into()))?;
        config.apply_seed(seed);
        config.validate()?;
        let exists = |p: PathBuf| -> anyhow::Result<PathBuf> {
            if p.exists() {
                Ok(p)
            } else {
                Err(usage(format!("configured path {} does not exist", p.display())))
            }
        };
        let corpus = config.paths.corpus.iter().map(|p| exists(resolve(&base, p))).collect::<Result<_, _>>()?;
        let findings = config.paths.findings.as_ref().map(|p| exists(resolve(&base, p))).transpose()?;
        let ir = config.paths.ir.as_ref().map(|p| exists(resolve(&base, p))).transpose()?;
        let out = match (out, &config.paths.out) {
            (Some(o), _) => o.to_path_buf(),
            (None, Some(o)) => resolve(&base, o),
            (None, None) => return Err(usage("no output directory: set paths.out or pass --out".into())),
        };
        std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
        let hash = config.hash();
        Ok(Self { config, seed, corpus, findings, ir, out, hash })
    }
}
