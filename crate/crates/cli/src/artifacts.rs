//! Fixed artifact names under the output directory and config-hash headers.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use bugsift::embedding::{EmbeddingMatrix, Vocabulary};
use bugsift::irfeat::{read_feature_csv, BuildFeatureVector};
use bugsift::lexer::{read_sequences, TokenSequence};
use bugsift::models::ModelFile;
use bugsift::pipeline::ManifestFile;

use crate::ModelChoice;

pub const TOKENS: &str = "tokens.tsv";
pub const FUNCTIONS: &str = "functions.tsv";
pub const BUILD: &str = "build.csv";
pub const VOCAB: &str = "vocab.tsv";
pub const EMBEDDING: &str = "embedding.bin";
pub const MANIFEST: &str = "manifest.jsonl";
pub const COUNTS: &str = "counts.tsv";

pub fn model_name(kind: ModelChoice) -> String {
    format!("model-{}.bin", kind.name())
}

pub fn header(hash: &str) -> String {
    format!("#config={hash}\n")
}

pub struct Store<'a> {
    pub dir: &'a Path,
    pub hash: &'a str,
}

impl Store<'_> {
    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write(&self, name: &str, data: &[u8]) -> anyhow::Result<()> {
        let p = self.path(name);
        std::fs::write(&p, data).with_context(|| format!("writing {}", p.display()))?;
        log::info!("wrote {}", p.display());
        Ok(())
    }

    /// Write a text artifact behind a `#config=` line.
    pub fn write_text(&self, name: &str, body: &str) -> anyhow::Result<()> {
        self.write(name, format!("{}{body}", header(self.hash)).as_bytes())
    }

    pub fn read(&self, name: &str) -> anyhow::Result<Vec<u8>> {
        let p = self.path(name);
        std::fs::read(&p).with_context(|| format!("reading {} (run the stage that produces it first)", p.display()))
    }

    /// Read a text artifact and strip its header, refusing one made under another config.
    pub fn read_text(&self, name: &str) -> anyhow::Result<String> {
        let data = self.read(name)?;
        let text = String::from_utf8(data).with_context(|| format!("{name} is not UTF-8"))?;
        let body = self.strip_header(name, text.as_bytes())?;
        Ok(String::from_utf8(body.to_vec()).expect("suffix of valid UTF-8 at a line boundary"))
    }

    fn strip_header<'b>(&self, name: &str, data: &'b [u8]) -> anyhow::Result<&'b [u8]> {
        let end = data.iter().position(|&b| b == b'\n').unwrap_or(data.len());
        let first = std::str::from_utf8(&data[..end]).unwrap_or("");
        let Some(found) = first.strip_prefix("#config=") else {
            bail!("{name} has no #config= header");
        };
        self.check_hash(name, found)?;
        Ok(&data[(end + 1).min(data.len())..])
    }

    pub fn check_hash(&self, name: &str, found: &str) -> anyhow::Result<()> {
        if found != self.hash {
            bail!("{name} was produced under config {found}, current config is {}", self.hash);
        }
        Ok(())
    }

    pub fn exists(&self, name: &str) -> bool {
        self.path(name).exists()
    }

    pub fn tokens(&self) -> anyhow::Result<Vec<TokenSequence>> {
        read_sequences(&self.read_text(TOKENS)?).context(TOKENS)
    }

    pub fn build_vectors(&self) -> anyhow::Result<HashMap<String, BuildFeatureVector>> {
        let rows = read_feature_csv(&self.read_text(BUILD)?).context(BUILD)?;
        Ok(rows.into_iter().collect())
    }

    pub fn vocab(&self) -> anyhow::Result<Vocabulary> {
        Vocabulary::from_tsv(&self.read_text(VOCAB)?).context(VOCAB)
    }

    pub fn write_embedding(&self, m: &EmbeddingMatrix) -> anyhow::Result<()> {
        let mut data = header(self.hash).into_bytes();
        data.extend(m.to_bytes());
        self.write(EMBEDDING, &data)
    }

    pub fn embedding(&self) -> anyhow::Result<EmbeddingMatrix> {
        let data = self.read(EMBEDDING)?;
        let body = self.strip_header(EMBEDDING, &data)?;
        EmbeddingMatrix::from_bytes(body).context(EMBEDDING)
    }

    pub fn manifest(&self) -> anyhow::Result<ManifestFile> {
        let data = self.read(MANIFEST)?;
        let text = String::from_utf8(data).context("manifest is not UTF-8")?;
        let m = ManifestFile::parse(&text).context(MANIFEST)?;
        self.check_hash(MANIFEST, &m.config_hash)?;
        Ok(m)
    }

    pub fn model(&self, kind: ModelChoice) -> anyhow::Result<ModelFile> {
        let name = model_name(kind);
        let m = ModelFile::from_bytes(&self.read(&name)?).with_context(|| name.clone())?;
        self.check_hash(&name, &m.config_hash)?;
        Ok(m)
    }
}
