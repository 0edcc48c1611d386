//! Unsupervised token representations: vocabularies, bag-of-words counts and skip-gram
//! embeddings trained with negative sampling.

mod bow;
mod matrix;
mod skipgram;
mod vocab;

use thiserror::Error;

use crate::codec::CodecError;

pub use bow::{bag_of_words, BagOfWordsVector};
pub use matrix::{cosine, nearest_neighbors, EmbeddingMatrix};
pub use skipgram::{pair_loss, pair_loss_grad, train_embedding, NegativeSampler, PairGradient, SkipGramConfig};
pub use vocab::{Vocabulary, PAD_INDEX, PAD_TOKEN, UNK_INDEX, UNK_TOKEN};

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("cannot build a vocabulary from an empty corpus")]
    EmptyCorpus,
    #[error("invalid embedding config: {0}")]
    Config(String),
    #[error("token `{0}` is not in the vocabulary")]
    UnknownToken(String),
    #[error("vocabulary line {line}: {message}")]
    VocabularyFormat { line: usize, message: String },
    #[error("embedding file: {0}")]
    Format(#[from] CodecError),
}
