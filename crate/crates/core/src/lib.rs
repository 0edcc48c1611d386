//! Function-level vulnerability detection for C/C++ code.
//!
//! Source functions are lexed into anonymized token sequences ([`lexer`]), turned into
//! bag-of-words vectors or skip-gram embeddings ([`embedding`]), and textual IR is reduced to
//! fixed-size control-flow and use-def statistics ([`irfeat`]). Tree ensembles and a
//! convolutional text model ([`models`]) are trained on labels derived from static-analyzer
//! findings ([`pipeline`]) and scored with ROC and precision-recall curves ([`metrics`]).

pub mod embedding;
pub mod lexer;

mod codec;
pub use codec::CodecError;
pub mod irfeat;
pub mod metrics;
pub mod models;
pub mod pipeline;
