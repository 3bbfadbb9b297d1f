use std::collections::HashSet;

use proptest::prelude::*;
use stancegen::data::{
    build_vocab, make_split, parse_semeval_str, tokenize, Corpus, DEV_TARGET, TEST_TARGET,
    TRAIN_TARGETS, UNK,
};

fn targets() -> Vec<&'static str> {
    TRAIN_TARGETS
        .iter()
        .copied()
        .chain([DEV_TARGET, TEST_TARGET])
        .collect()
}

/// TSV text with every target present at least once plus `extra` rows.
fn tsv(extra: &[(usize, usize, String)]) -> String {
    let labels = ["FAVOR", "AGAINST", "NONE"];
    let mut out = String::from("ID\tTarget\tTweet\tStance\n");
    let mut id = 0;
    let base = targets()
        .iter()
        .enumerate()
        .map(|(i, _)| (i, i % 3, format!("seed row {i}")))
        .collect::<Vec<_>>();
    for (t, l, text) in base.iter().chain(extra) {
        id += 1;
        out.push_str(&format!(
            "{id}\t{}\t{text}\t{}\n",
            targets()[*t],
            labels[*l]
        ));
    }
    out
}

fn corpus(extra: &[(usize, usize, String)]) -> Corpus {
    parse_semeval_str(&tsv(extra), "generated.tsv").unwrap()
}

fn row() -> impl Strategy<Value = (usize, usize, String)> {
    (0usize..6, 0usize..3, "[a-z#@ ]{1,30}")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn splits_partition_the_corpus(extra in prop::collection::vec(row(), 0..60)) {
        let c = corpus(&extra);
        let s = make_split(&c).unwrap();
        prop_assert_eq!(s.train.len() + s.dev.len() + s.test.len(), c.len());
        let ids = |c: &Corpus| c.records.iter().map(|r| r.id.clone()).collect::<HashSet<_>>();
        let (a, b, d) = (ids(&s.train), ids(&s.dev), ids(&s.test));
        prop_assert!(a.is_disjoint(&b) && a.is_disjoint(&d) && b.is_disjoint(&d));
        prop_assert!(s.dev.records.iter().all(|r| r.target == DEV_TARGET && r.domain.is_none()));
        prop_assert!(s.test.records.iter().all(|r| r.target == TEST_TARGET && r.domain.is_none()));
        prop_assert!(s.train.records.iter().all(|r| r.domain.is_some()));
    }

    #[test]
    fn vocabulary_is_stable_and_training_only(extra in prop::collection::vec(row(), 0..40)) {
        let s = make_split(&corpus(&extra)).unwrap();
        let a = build_vocab(&[&s.train], 1);
        let b = build_vocab(&[&make_split(&corpus(&extra)).unwrap().train], 1);
        prop_assert_eq!(a.serialize(), b.serialize());
        prop_assert_eq!(a.hash(), b.hash());
        for r in &s.test.records {
            for tok in tokenize(&r.text).into_iter().filter(|t| t != UNK) {
                let in_train = s.train.records.iter().any(|t| tokenize(&t.text).contains(&tok) || tokenize(&t.target).contains(&tok));
                prop_assert_eq!(a.id(&tok).is_some(), in_train, "{}", tok);
            }
        }
    }

    #[test]
    fn tokenize_is_idempotent(text in "\\PC{0,60}") {
        let once = tokenize(&text);
        prop_assert_eq!(tokenize(&once.join(" ")), once);
    }
}
