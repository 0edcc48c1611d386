use std::fmt;
use std::str::FromStr;

use super::conv::ConvTextModel;
use super::ensemble::TreeEnsemble;
use super::hybrid::HybridModel;
use super::ModelError;
use crate::codec::{ByteReader, ByteWriter, CodecError};

const MAGIC: &[u8] = b"BSMODEL\0";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Ensemble,
    Conv,
    Hybrid,
    Combined,
}

impl ModelKind {
    fn tag(self) -> u8 {
        match self {
            ModelKind::Ensemble => 0,
            ModelKind::Conv => 1,
            ModelKind::Hybrid => 2,
            ModelKind::Combined => 3,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Ensemble => "ensemble",
            ModelKind::Conv => "conv",
            ModelKind::Hybrid => "hybrid",
            ModelKind::Combined => "combined",
        })
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "ensemble" => ModelKind::Ensemble,
            "conv" => ModelKind::Conv,
            "hybrid" => ModelKind::Hybrid,
            "combined" => ModelKind::Combined,
            _ => return Err(format!("unknown model kind `{s}`")),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelArtifact {
    Ensemble(TreeEnsemble),
    Conv(ConvTextModel),
    Hybrid(HybridModel),
    /// Ensemble over build features followed by `bow_len` bag-of-words counts.
    Combined {
        ensemble: TreeEnsemble,
        bow_len: usize,
    },
}

impl ModelArtifact {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelArtifact::Ensemble(_) => ModelKind::Ensemble,
            ModelArtifact::Conv(_) => ModelKind::Conv,
            ModelArtifact::Hybrid(_) => ModelKind::Hybrid,
            ModelArtifact::Combined { .. } => ModelKind::Combined,
        }
    }
}

/// A model plus the hash of the configuration that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub config_hash: String,
    pub model: ModelArtifact,
}

impl ModelFile {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = ByteWriter::new();
        w.bytes(MAGIC);
        w.u32(VERSION);
        w.u8(self.model.kind().tag());
        w.str(&self.config_hash);
        match &self.model {
            ModelArtifact::Ensemble(e) => e.write(&mut w),
            ModelArtifact::Conv(c) => c.write(&mut w),
            ModelArtifact::Hybrid(h) => {
                h.conv.write(&mut w);
                h.ensemble.write(&mut w);
            }
            ModelArtifact::Combined { ensemble, bow_len } => {
                w.len_u32(*bow_len);
                ensemble.write(&mut w);
            }
        }
        w.into_inner()
    }

    pub fn from_bytes(data: &[u8]) -> Result<Self, ModelError> {
        let mut r = ByteReader::new(data);
        r.magic(MAGIC)?;
        let version = r.u32()?;
        if version != VERSION {
            return Err(CodecError::UnsupportedVersion(version).into());
        }
        let tag = r.u8()?;
        let config_hash = r.str()?;
        let model = match tag {
            0 => ModelArtifact::Ensemble(TreeEnsemble::read(&mut r)?),
            1 => ModelArtifact::Conv(ConvTextModel::read(&mut r)?),
            2 => {
                let conv = ConvTextModel::read(&mut r)?;
                let ensemble = TreeEnsemble::read(&mut r)?;
                if ensemble.n_features != conv.feature_len() {
                    return Err(CodecError::Invalid("hybrid ensemble width differs from conv features".into()).into());
                }
                ModelArtifact::Hybrid(HybridModel { conv, ensemble })
            }
            3 => {
                let bow_len = r.len_u32()?;
                let ensemble = TreeEnsemble::read(&mut r)?;
                if ensemble.n_features != crate::irfeat::BUILD_VECTOR_LEN + bow_len {
                    return Err(CodecError::Invalid("combined ensemble width mismatch".into()).into());
                }
                ModelArtifact::Combined { ensemble, bow_len }
            }
            t => return Err(CodecError::Invalid(format!("unknown model kind tag {t}")).into()),
        };
        r.finish()?;
        Ok(Self { config_hash, model })
    }
}
