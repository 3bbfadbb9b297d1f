//! Fixtures shared by the benchmarks.

use std::sync::Arc;

use stancegen::data::{build_vocab, encode_corpus, synthetic, Example};
use stancegen::{Model, ModelSpec, Scalar, Variant};

/// Full-size model dimensions.
pub const EMBED_DIM: usize = 100;
pub const HIDDEN_DIM: usize = 200;

/// A model over a generated vocabulary plus a few encoded examples.
pub struct Fixture<T: Scalar> {
    pub model: Model<T>,
    pub examples: Vec<Example>,
}

pub fn fixture<T: Scalar>(variant: Variant, embed_dim: usize, hidden_dim: usize) -> Fixture<T> {
    let data = synthetic::generate(&synthetic::SyntheticConfig {
        train_per_domain: 8,
        min_len: 12,
        max_len: 18,
        ..Default::default()
    });
    let vocab = build_vocab(&[&data.train], 1);
    let emb = Arc::new(synthetic::embeddings::<T>(&vocab, embed_dim, 0));
    let spec = ModelSpec::new(variant, embed_dim, hidden_dim, data.domain_names.len());
    Fixture {
        model: Model::build(spec, 0, emb).expect("valid spec"),
        examples: encode_corpus(&data.train, &vocab),
    }
}
