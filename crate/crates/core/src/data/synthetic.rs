//! Generated multi-domain stance corpus with a planted spurious shortcut.
//!
//! Every sentence carries one shared cue word whose class matches the label
//! with probability `cue_reliability`. Each source domain also has its own
//! marker word that appears in exactly the examples of one label. Half of
//! the source domains tie their marker to FAVOR and half to AGAINST, so the
//! shortcut is only usable together with domain identity. Held-out examples
//! reuse the source markers with every tie reversed.

use rand::seq::SliceRandom;
use rand::{Rng as _, SeedableRng};

use super::corpus::{Corpus, Record};
use super::embeddings::EmbeddingMatrix;
use super::vocab::{Vocabulary, PAD_ID};
use crate::tensor::Scalar;
use crate::Rng;
use crate::Stance;

pub const FAVOR_CUES: [&str; 4] = ["good", "great", "love", "support"];
pub const AGAINST_CUES: [&str; 4] = ["bad", "awful", "hate", "oppose"];

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub source_domains: usize,
    pub train_per_domain: usize,
    pub dev_per_domain: usize,
    pub heldout_size: usize,
    pub cue_reliability: f64,
    pub fillers: usize,
    pub min_len: usize,
    pub max_len: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            source_domains: 4,
            train_per_domain: 80,
            dev_per_domain: 20,
            heldout_size: 200,
            cue_reliability: 0.8,
            fillers: 24,
            min_len: 4,
            max_len: 7,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntheticData {
    pub train: Corpus,
    /// In-distribution validation examples from the source domains.
    pub dev: Corpus,
    /// Examples from the unseen domain.
    pub heldout: Corpus,
    pub domain_names: Vec<String>,
}

pub fn marker(domain: usize) -> String {
    format!("mark{domain}")
}

/// Label the marker of `domain` co-occurs with in the source domains.
pub fn marker_label(domain: usize) -> Stance {
    if domain.is_multiple_of(2) {
        Stance::Favor
    } else {
        Stance::Against
    }
}

fn opposite(s: Stance) -> Stance {
    match s {
        Stance::Favor => Stance::Against,
        _ => Stance::Favor,
    }
}

struct Generator<'c> {
    cfg: &'c SyntheticConfig,
    rng: Rng,
    next_id: usize,
}

impl Generator<'_> {
    fn sentence(&mut self, stance: Stance, marker_word: Option<String>) -> String {
        let cfg = self.cfg;
        let len = self.rng.gen_range(cfg.min_len..=cfg.max_len);
        let mut words: Vec<String> = (0..len)
            .map(|_| format!("w{}", self.rng.gen_range(0..cfg.fillers)))
            .collect();
        let cue_class = if self.rng.gen::<f64>() < cfg.cue_reliability {
            stance
        } else {
            opposite(stance)
        };
        let pool = if cue_class == Stance::Favor {
            &FAVOR_CUES
        } else {
            &AGAINST_CUES
        };
        words.push(pool[self.rng.gen_range(0..pool.len())].to_string());
        words.extend(marker_word);
        words.shuffle(&mut self.rng);
        words.join(" ")
    }

    fn record(
        &mut self,
        target: &str,
        stance: Stance,
        domain: Option<usize>,
        text: String,
    ) -> Record {
        self.next_id += 1;
        Record {
            id: self.next_id.to_string(),
            target: target.to_string(),
            text,
            stance,
            domain,
        }
    }

    fn source(&mut self, domain: usize, count: usize, target: &str) -> Vec<Record> {
        (0..count)
            .map(|i| {
                let stance = if i % 2 == 0 {
                    Stance::Favor
                } else {
                    Stance::Against
                };
                let m = (stance == marker_label(domain)).then(|| marker(domain));
                let text = self.sentence(stance, m);
                self.record(target, stance, Some(domain), text)
            })
            .collect()
    }
}

pub fn generate(cfg: &SyntheticConfig) -> SyntheticData {
    let mut g = Generator {
        cfg,
        rng: Rng::seed_from_u64(cfg.seed),
        next_id: 0,
    };
    let domain_names: Vec<String> = (0..cfg.source_domains)
        .map(|d| format!("topic{d}"))
        .collect();
    let mut train = Vec::new();
    let mut dev = Vec::new();
    for (d, name) in domain_names.iter().enumerate() {
        train.extend(g.source(d, cfg.train_per_domain, name));
        dev.extend(g.source(d, cfg.dev_per_domain, name));
    }
    let mut heldout = Vec::new();
    for i in 0..cfg.heldout_size {
        let stance = if i % 2 == 0 {
            Stance::Favor
        } else {
            Stance::Against
        };
        // A marker whose source tie is the opposite label.
        let candidates: Vec<usize> = (0..cfg.source_domains)
            .filter(|&d| marker_label(d) != stance)
            .collect();
        let d = candidates[g.rng.gen_range(0..candidates.len())];
        let text = g.sentence(stance, Some(marker(d)));
        heldout.push(g.record("topic unseen", stance, None, text));
    }
    train.shuffle(&mut g.rng);
    SyntheticData {
        train: Corpus::new(train),
        dev: Corpus::new(dev),
        heldout: Corpus::new(heldout),
        domain_names,
    }
}

/// Unit-scale random vectors standing in for pretrained ones: rows are
/// uniform in `[-1, 1]`, the padding row is zero.
pub fn embeddings<T: Scalar>(vocab: &Vocabulary, dim: usize, seed: u64) -> EmbeddingMatrix<T> {
    let mut rng = Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(vocab.len() * dim);
    for id in 0..vocab.len() {
        for _ in 0..dim {
            let x: f64 = rng.gen_range(-1.0..=1.0);
            values.push(T::of(if id == PAD_ID { 0.0 } else { x }));
        }
    }
    EmbeddingMatrix::from_rows(dim, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn markers_tie_to_one_label_in_sources_and_flip_in_heldout() {
        let data = generate(&SyntheticConfig::default());
        for r in &data.train.records {
            let d = r.domain.unwrap();
            let has = r.text.split(' ').any(|w| w == marker(d));
            assert_eq!(has, r.stance == marker_label(d));
        }
        for r in &data.heldout.records {
            let m = r.text.split(' ').find(|w| w.starts_with("mark")).unwrap();
            let d: usize = m[4..].parse().unwrap();
            assert_ne!(marker_label(d), r.stance);
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let cfg = SyntheticConfig::default();
        assert_eq!(generate(&cfg), generate(&cfg));
        let other = SyntheticConfig {
            seed: 1,
            ..cfg.clone()
        };
        assert_ne!(generate(&cfg).train, generate(&other).train);
    }

    #[test]
    fn embeddings_are_unit_scale_and_stable() {
        let vocab = Vocabulary::from_tokens(["a", "b"]);
        let e = embeddings::<f64>(&vocab, 5, 3);
        assert_eq!(e.rows(), 4);
        assert!(e.row(PAD_ID).unwrap().iter().all(|&x| x == 0.0));
        assert!(e.row(2).unwrap().iter().all(|x| x.abs() <= 1.0));
        assert!(e.row(2).unwrap().iter().any(|x| x.abs() > 0.05));
        assert_eq!(e, embeddings::<f64>(&vocab, 5, 3));
    }
}
