use std::collections::HashMap;

use crate::codec::{ByteReader, ByteWriter, CodecError};

use super::{EmbeddingError, SkipGramConfig, PAD_INDEX};

const MAGIC: &[u8] = b"BSEMB\0";
const VERSION: u32 = 1;

/// One row per vocabulary entry, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    dim: usize,
    vectors: Vec<f32>,
    /// Present on freshly trained matrices; not persisted.
    pub meta: Option<SkipGramConfig>,
}

impl EmbeddingMatrix {
    pub fn new(tokens: Vec<String>, dim: usize, vectors: Vec<f32>) -> Result<Self, EmbeddingError> {
        if dim == 0 {
            return Err(EmbeddingError::Config("embedding dimension must be positive".into()));
        }
        if vectors.len() != tokens.len() * dim {
            return Err(EmbeddingError::Config(format!(
                "{} values do not form {} rows of width {dim}",
                vectors.len(),
                tokens.len()
            )));
        }
        if vectors.iter().any(|x| !x.is_finite()) {
            return Err(EmbeddingError::Config("embedding contains non-finite values".into()));
        }
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Ok(Self { tokens, index, dim, vectors, meta: None })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> usize {
        self.tokens.len()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f32] {
        &mut self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    pub fn vectors(&self) -> &[f32] {
        &self.vectors
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = ByteWriter::new();
        w.bytes(MAGIC);
        w.u32(VERSION);
        w.len_u32(self.tokens.len());
        w.len_u32(self.dim);
        for t in &self.tokens {
            w.str(t);
        }
        for &x in &self.vectors {
            w.f32(x);
        }
        w.into_inner()
    }

    pub fn from_bytes(data: &[u8]) -> Result<Self, EmbeddingError> {
        let mut r = ByteReader::new(data);
        r.magic(MAGIC)?;
        let version = r.u32()?;
        if version != VERSION {
            return Err(CodecError::UnsupportedVersion(version).into());
        }
        let rows = r.len_u32()?;
        let dim = r.len_u32()?;
        let tokens = (0..rows).map(|_| r.str()).collect::<Result<Vec<_>, _>>()?;
        let n = rows.checked_mul(dim).ok_or_else(|| CodecError::Invalid("matrix size overflows".into()))?;
        let vectors = r.f32_vec(n)?.into_iter().map(|x| x as f32).collect();
        r.finish()?;
        Self::new(tokens, dim, vectors)
    }
}

/// Cosine similarity; 0 when either vector is zero.
pub fn cosine(a: &[f32], b: &[f32]) -> f64 {
    let (mut ab, mut aa, mut bb) = (0.0f64, 0.0f64, 0.0f64);
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (x as f64, y as f64);
        ab += x * y;
        aa += x * x;
        bb += y * y;
    }
    if aa == 0.0 || bb == 0.0 {
        0.0
    } else {
        ab / (aa.sqrt() * bb.sqrt())
    }
}

/// The `k` rows most cosine-similar to `token`, excluding the query and padding rows.
/// Ties are broken by lower index.
pub fn nearest_neighbors(m: &EmbeddingMatrix, token: &str, k: usize) -> Result<Vec<(String, f64)>, EmbeddingError> {
    let q = m.index_of(token).ok_or_else(|| EmbeddingError::UnknownToken(token.to_string()))?;
    let query = m.row(q);
    let mut scored: Vec<(usize, f64)> =
        (0..m.rows()).filter(|&i| i != q && i != PAD_INDEX).map(|i| (i, cosine(query, m.row(i)))).collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(scored.into_iter().take(k).map(|(i, c)| (m.tokens[i].clone(), c)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix() -> EmbeddingMatrix {
        let tokens = ["<pad>", "<unk>", "a", "b", "c"].map(String::from).to_vec();
        let vectors = vec![0., 0., 1., 0., 0.6, 0.8, 0.8, 0.6, -1., 0.];
        EmbeddingMatrix::new(tokens, 2, vectors).unwrap()
    }

    #[test]
    fn self_cosine_is_one() {
        let m = matrix();
        for i in 1..m.rows() {
            assert!((cosine(m.row(i), m.row(i)) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_k_is_empty() {
        assert!(nearest_neighbors(&matrix(), "a", 0).unwrap().is_empty());
    }

    #[test]
    fn duplicated_row_is_nearest() {
        let mut m = matrix();
        let src = m.row(2).to_vec();
        m.row_mut(4).copy_from_slice(&src);
        let nn = nearest_neighbors(&m, "a", 1).unwrap();
        assert_eq!(nn[0].0, "c");
        assert!((nn[0].1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ordering_and_ties() {
        let m = matrix();
        let nn = nearest_neighbors(&m, "b", 10).unwrap();
        let names: Vec<_> = nn.iter().map(|(t, _)| t.as_str()).collect();
        assert_eq!(names, ["a", "<unk>", "c"]);
        let tie =
            EmbeddingMatrix::new(["<pad>", "x", "y", "z"].map(String::from).to_vec(), 1, vec![0., 1., 1., 1.]).unwrap();
        let nn = nearest_neighbors(&tie, "z", 2).unwrap();
        assert_eq!(nn[0].0, "x");
        assert_eq!(nn[1].0, "y");
    }

    #[test]
    fn unknown_token() {
        assert!(matches!(
            nearest_neighbors(&matrix(), "nope", 1),
            Err(EmbeddingError::UnknownToken(t)) if t == "nope"
        ));
    }

    #[test]
    fn binary_layout() {
        let m = matrix();
        let bytes = m.to_bytes();
        assert_eq!(&bytes[..6], MAGIC);
        assert_eq!(u32::from_le_bytes(bytes[6..10].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(bytes[10..14].try_into().unwrap()), 5);
        assert_eq!(u32::from_le_bytes(bytes[14..18].try_into().unwrap()), 2);
        assert_eq!(u32::from_le_bytes(bytes[18..22].try_into().unwrap()), 5);
        assert_eq!(&bytes[22..27], b"<pad>");
        let back = EmbeddingMatrix::from_bytes(&bytes).unwrap();
        assert_eq!(back, m);
        assert!(EmbeddingMatrix::from_bytes(&bytes[..bytes.len() - 1]).is_err());
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(EmbeddingMatrix::new(vec!["a".into()], 2, vec![1.0]).is_err());
        assert!(EmbeddingMatrix::new(vec!["a".into()], 1, vec![f32::NAN]).is_err());
    }
}
