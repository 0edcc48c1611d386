use crate::lexer::TokenSequence;

use super::Vocabulary;

/// Token frequencies over a vocabulary; out-of-vocabulary tokens count at the unk index.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BagOfWordsVector {
    pub counts: Vec<u32>,
}

impl BagOfWordsVector {
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64).collect()
    }
}

pub fn bag_of_words(seq: &TokenSequence, vocab: &Vocabulary) -> BagOfWordsVector {
    let mut counts = vec![0u32; vocab.len()];
    for t in &seq.tokens {
        counts[vocab.index_of(t.text())] += 1;
    }
    BagOfWordsVector { counts }
}
