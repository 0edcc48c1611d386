use std::collections::HashMap;
use std::fmt::Write as _;

use crate::lexer::TokenSequence;

use super::EmbeddingError;

pub const PAD_TOKEN: &str = "<pad>";
pub const UNK_TOKEN: &str = "<unk>";
pub const PAD_INDEX: usize = 0;
pub const UNK_INDEX: usize = 1;

/// Dense token index. Index 0 is padding, index 1 collects out-of-vocabulary tokens, the rest
/// are ordered by descending corpus count with lexicographic tie-break.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, usize>,
    min_count: u64,
}

impl Vocabulary {
    pub fn build(corpus: &[TokenSequence], min_count: u64) -> Result<Self, EmbeddingError> {
        if corpus.is_empty() {
            return Err(EmbeddingError::EmptyCorpus);
        }
        if min_count < 1 {
            return Err(EmbeddingError::Config("minCount must be at least 1".into()));
        }
        let mut freq: HashMap<&str, u64> = HashMap::new();
        for seq in corpus {
            for t in &seq.tokens {
                *freq.entry(t.text()).or_default() += 1;
            }
        }
        let mut kept: Vec<(&str, u64)> = Vec::new();
        let mut unk = 0;
        for (tok, n) in freq {
            if n >= min_count {
                kept.push((tok, n));
            } else {
                unk += n;
            }
        }
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));

        let mut tokens = vec![PAD_TOKEN.to_string(), UNK_TOKEN.to_string()];
        let mut counts = vec![0, unk];
        for (tok, n) in kept {
            tokens.push(tok.to_string());
            counts.push(n);
        }
        Ok(Self::from_parts(tokens, counts, min_count))
    }

    fn from_parts(tokens: Vec<String>, counts: Vec<u64>, min_count: u64) -> Self {
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Self { tokens, counts, index, min_count }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn min_count(&self) -> u64 {
        self.min_count
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    /// Index of `token`, or [`UNK_INDEX`] when absent. Never returns the padding index.
    pub fn index_of(&self, token: &str) -> usize {
        match self.get(token) {
            Some(PAD_INDEX) | None => UNK_INDEX,
            Some(i) => i,
        }
    }

    pub fn token(&self, index: usize) -> &str {
        &self.tokens[index]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn count(&self, index: usize) -> u64 {
        self.counts[index]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn encode(&self, seq: &TokenSequence) -> Vec<usize> {
        seq.tokens.iter().map(|t| self.index_of(t.text())).collect()
    }

    /// Tab-separated `token \t count \t index` lines, preceded by a `#min_count` line.
    pub fn to_tsv(&self) -> String {
        let mut out = format!("#min_count\t{}\n", self.min_count);
        for (i, (t, c)) in self.tokens.iter().zip(&self.counts).enumerate() {
            let _ = writeln!(out, "{t}\t{c}\t{i}");
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self, EmbeddingError> {
        let mut tokens = Vec::new();
        let mut counts = Vec::new();
        let mut min_count = 1;
        for (n, line) in text.lines().enumerate() {
            let err = |message: &str| EmbeddingError::VocabularyFormat { line: n + 1, message: message.to_string() };
            if let Some(rest) = line.strip_prefix("#min_count\t") {
                min_count = rest.trim().parse().map_err(|_| err("bad min_count"))?;
                continue;
            }
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let [tok, count, idx] = fields[..] else {
                return Err(err("expected 3 tab-separated fields"));
            };
            let count: u64 = count.parse().map_err(|_| err("bad count"))?;
            let idx: usize = idx.parse().map_err(|_| err("bad index"))?;
            if idx != tokens.len() {
                return Err(err("indices must be contiguous from 0"));
            }
            tokens.push(tok.to_string());
            counts.push(count);
        }
        if tokens.len() < 2 || tokens[PAD_INDEX] != PAD_TOKEN || tokens[UNK_INDEX] != UNK_TOKEN {
            return Err(EmbeddingError::VocabularyFormat {
                line: 0,
                message: "vocabulary must start with <pad> and <unk>".into(),
            });
        }
        Ok(Self::from_parts(tokens, counts, min_count))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexer::{FunctionId, Token};

    pub(crate) fn seq(toks: &[&str]) -> TokenSequence {
        TokenSequence::new(FunctionId::default(), toks.iter().map(|t| Token::from_canonical(t).unwrap()).collect())
    }

    #[test]
    fn ordering_by_count_then_text() {
        let v = Vocabulary::build(&[seq(&["kw:if", "var:0", "var:0"])], 1).unwrap();
        assert_eq!(v.tokens(), [PAD_TOKEN, UNK_TOKEN, "var:0", "kw:if"]);
        assert_eq!(v.counts(), [0, 0, 2, 1]);
    }

    #[test]
    fn min_count_cutoff() {
        let v = Vocabulary::build(&[seq(&["kw:if", "var:0", "var:0"])], 2).unwrap();
        assert_eq!(v.tokens(), [PAD_TOKEN, UNK_TOKEN, "var:0"]);
        assert_eq!(v.count(UNK_INDEX), 1);
        assert_eq!(v.index_of("kw:if"), UNK_INDEX);
    }

    #[test]
    fn deterministic() {
        let corpus = [seq(&["kw:if", "var:1", "var:0", "op:+"]), seq(&["var:0", "op:+"])];
        assert_eq!(Vocabulary::build(&corpus, 1).unwrap(), Vocabulary::build(&corpus, 1).unwrap());
    }

    #[test]
    fn lexicographic_tie_break() {
        let v = Vocabulary::build(&[seq(&["var:1", "kw:if", "op:+"])], 1).unwrap();
        assert_eq!(&v.tokens()[2..], ["kw:if", "op:+", "var:1"]);
    }

    #[test]
    fn errors() {
        assert!(matches!(Vocabulary::build(&[], 1), Err(EmbeddingError::EmptyCorpus)));
        assert!(matches!(Vocabulary::build(&[seq(&[])], 0), Err(EmbeddingError::Config(_))));
    }

    #[test]
    fn tsv_round_trip() {
        let v = Vocabulary::build(&[seq(&["kw:if", "var:0", "var:0", "str"])], 2).unwrap();
        let back = Vocabulary::from_tsv(&v.to_tsv()).unwrap();
        assert_eq!(back, v);
        assert!(Vocabulary::from_tsv("a\t1\t0\n").is_err());
    }
}
