//! Dataset ingestion: TSV parsing, tokenization, vocabulary, word vectors,
//! the unseen-target split, and a synthetic multi-domain generator.

mod corpus;
mod embeddings;
mod split;
pub mod synthetic;
mod tokenize;
mod vocab;

pub use corpus::{parse_semeval_str, parse_semeval_tsv, Corpus, Record};
pub use embeddings::{fallback_vector, load_embeddings, EmbeddingMatrix};
pub use split::{
    make_split, verify_counts, Split, DEV_TARGET, DEV_TOTAL, TEST_TARGET, TEST_TOTAL, TRAIN_COUNTS,
    TRAIN_TARGETS,
};
pub use tokenize::{tokenize, UNK, URL, USER};
pub use vocab::{build_vocab, Vocabulary, PAD, PAD_ID, UNK_ID};

use crate::Stance;

/// A tokenized, id-mapped (sentence, target) pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Example {
    pub sentence: Vec<usize>,
    pub target: Vec<usize>,
    pub stance: Stance,
    pub domain: Option<usize>,
    /// Sentence tokens as strings, aligned with `sentence`.
    pub tokens: Vec<String>,
    pub target_text: String,
}

impl Example {
    pub fn encode(record: &Record, vocab: &Vocabulary) -> Self {
        let tokens = tokenize(&record.text);
        let target_tokens = tokenize(&record.target);
        Example {
            sentence: tokens.iter().map(|t| vocab.id_or_unk(t)).collect(),
            target: target_tokens.iter().map(|t| vocab.id_or_unk(t)).collect(),
            stance: record.stance,
            domain: record.domain,
            tokens,
            target_text: record.target.clone(),
        }
    }
}

pub fn encode_corpus(corpus: &Corpus, vocab: &Vocabulary) -> Vec<Example> {
    corpus
        .records
        .iter()
        .map(|r| Example::encode(r, vocab))
        .collect()
}
