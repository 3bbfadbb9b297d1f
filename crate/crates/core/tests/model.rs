use std::sync::Arc;

use proptest::prelude::*;
use stancegen::data::{synthetic, Example, Vocabulary};
use stancegen::model::{AdversarialLink, Checkpoint};
use stancegen::nn::{Dropout, ParamGroup};
use stancegen::tensor::Tape;
use stancegen::train::{domain_loss_graph, objective, stance_loss_graph};
use stancegen::{Model, ModelSpec, Stance, Variant};

const DOMAINS: usize = 4;

fn model(variant: Variant, seed: u64) -> Model<f64> {
    let vocab = Vocabulary::from_tokens(["a", "b", "c", "d", "e", "f"]);
    let emb = Arc::new(synthetic::embeddings::<f64>(&vocab, 4, 3));
    Model::build(ModelSpec::new(variant, 4, 3, DOMAINS), seed, emb).unwrap()
}

fn example(sentence: Vec<usize>, target: Vec<usize>, domain: usize) -> Example {
    Example {
        sentence,
        target,
        stance: Stance::Favor,
        domain: Some(domain),
        tokens: vec![],
        target_text: String::new(),
    }
}

fn ids(max: usize) -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1usize..max, 1..5)
}

/// Per-parameter gradients of `λ · domain_loss` through the given link.
fn domain_grads(m: &Model<f64>, ex: &Example, lambda: f64, link: AdversarialLink) -> Vec<Vec<f64>> {
    let mut t = Tape::<f64>::new();
    let bound = m.params().bind(&mut t);
    let g = m
        .forward_graph(&mut t, &bound, ex, &mut Dropout::eval(), link)
        .unwrap();
    let dl = domain_loss_graph(&mut t, &g.domain_probs, ex.domain.unwrap()).unwrap();
    let root = t.scale(dl, lambda);
    let grads = t.backward(root).unwrap();
    bound.vars().iter().map(|&v| grads.wrt(v)).collect()
}

fn adversarial() -> impl Strategy<Value = Variant> {
    prop_oneof![
        Just(Variant::ConcatInvar),
        Just(Variant::BcaInvar),
        Just(Variant::BcaInvarSpec)
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn saddle_point_gradient_direction(
        variant in adversarial(),
        seed in any::<u64>(),
        sentence in ids(8),
        target in ids(8),
        domain in 0usize..DOMAINS,
        lambda in 0.01f64..3.0,
    ) {
        let m = model(variant, seed);
        let ex = example(sentence, target, domain);
        let rev = domain_grads(&m, &ex, lambda, AdversarialLink::Reversed);
        let plain = domain_grads(&m, &ex, lambda, AdversarialLink::Plain);
        for ((p, a), b) in m.params().iter().zip(&rev).zip(&plain) {
            match p.group {
                ParamGroup::Stance => prop_assert!(a.iter().zip(b).all(|(x, y)| *x == -*y), "{}", p.name),
                ParamGroup::Adversarial => prop_assert!(a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()), "{}", p.name),
            }
        }
    }

    #[test]
    fn domain_heads_leave_the_stance_path_alone(
        seed in any::<u64>(),
        sentence in ids(8),
        target in ids(8),
    ) {
        let ex = example(sentence, target, 0);
        for (plain, invar) in [(Variant::Bca, Variant::BcaInvar), (Variant::Concat, Variant::ConcatInvar)] {
            let a = model(plain, seed).predict(&ex).unwrap();
            let b = model(invar, seed).predict(&ex).unwrap();
            prop_assert_eq!(&a.stance_probs, &b.stance_probs);
            prop_assert!(a.domain_probs.is_empty());
            prop_assert_eq!(b.domain_probs.len(), DOMAINS);
        }
    }

    #[test]
    fn objective_combines_stance_and_weighted_domain_loss(
        seed in any::<u64>(),
        sentence in ids(8),
        target in ids(8),
        domain in 0usize..DOMAINS,
        lambda in 0.0f64..2.0,
    ) {
        let m = model(Variant::BcaInvarSpec, seed);
        let ex = example(sentence, target, domain);
        let mut t = Tape::<f64>::new();
        let bound = m.params().bind(&mut t);
        let g = m.forward_graph(&mut t, &bound, &ex, &mut Dropout::eval(), AdversarialLink::Reversed).unwrap();
        let obj = objective(&mut t, &g, ex.stance, ex.domain, lambda).unwrap();
        let s = t.scalar(obj.stance);
        let d = t.scalar(obj.domain.unwrap());
        prop_assert!((t.scalar(obj.root) - (s + lambda * d)).abs() < 1e-12);
        let alone = stance_loss_graph(&mut t, g.stance_probs, ex.stance).unwrap();
        prop_assert_eq!(t.scalar(alone), s);
    }
}

#[test]
fn every_variant_round_trips_through_a_checkpoint() {
    let ex = example(vec![2, 3, 4], vec![5], 1);
    for v in Variant::ALL {
        let m = model(v, 9);
        let bytes = Checkpoint::from_model(&m, "hash", serde_json::json!({}))
            .to_bytes()
            .unwrap();
        let back = Checkpoint::<f64>::from_bytes(&bytes).unwrap();
        let restored = back.into_model(m.embeddings().clone()).unwrap();
        assert_eq!(
            m.predict(&ex).unwrap().stance_probs,
            restored.predict(&ex).unwrap().stance_probs,
            "{v}"
        );
    }
}

#[test]
fn attention_exists_exactly_for_bca_variants() {
    let ex = example(vec![2, 3, 4], vec![5, 6], 1);
    for v in Variant::ALL {
        let out = model(v, 1).predict(&ex).unwrap();
        assert_eq!(out.attention.is_some(), v.has_attention(), "{v}");
        if let Some(a) = out.attention {
            assert_eq!(a.alpha.len(), 3);
            assert!((a.alpha.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
