use std::sync::Arc;

use rand::SeedableRng;

use super::spec::{ModelSpec, Variant};
use crate::data::{EmbeddingMatrix, Example};
use crate::error::{Error, Result};
use crate::nn::{
    additive_attention, bilstm_encode, conditional_encode, max_pool_encode, Attention,
    AttentionParams, BiLstmParams, Bound, ConditionalParams, Dropout, Param, ParamGroup, ParamId,
    ParamStore,
};
use crate::tensor::{Scalar, Tape, Tensor, Var};
use crate::{Rng, Stance};

/// How the domain heads are attached to the shared representation.
///
/// `Reversed` inserts the gradient-reversal layer used in training;
/// `Plain` connects the heads directly and exists for twin-graph checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AdversarialLink {
    #[default]
    Reversed,
    Plain,
}

#[derive(Debug, Clone, Copy)]
struct Branch {
    encoder: ConditionalParams,
    attention: AttentionParams,
}

// Built once per model; the size gap does not matter.
#[allow(clippy::large_enum_variant)]
#[derive(Debug, Clone, Copy)]
enum Encoder {
    Conditional {
        invariant: Branch,
        specific: Option<Branch>,
    },
    Independent {
        target: BiLstmParams,
        sentence: BiLstmParams,
    },
}

#[derive(Debug, Clone, Copy)]
struct StanceHead {
    w_mlp: ParamId,
    w_out: ParamId,
}

#[derive(Debug, Clone, Copy)]
struct DomainHead {
    w: ParamId,
    b: ParamId,
}

/// Tape handles produced by one forward pass.
#[derive(Debug, Clone)]
pub struct Graph {
    pub stance_probs: Var,
    /// One length-2 distribution per source domain; index 1 is "belongs to
    /// this domain". Empty for non-adversarial variants.
    pub domain_probs: Vec<Var>,
    pub attention: Option<Attention>,
    /// Representation fed to the stance head.
    pub repr: Var,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionValues<T> {
    pub s: Vec<T>,
    pub alpha: Vec<T>,
}

/// Plain values of a forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardOutput<T> {
    pub stance_probs: Vec<T>,
    pub domain_probs: Vec<Vec<T>>,
    pub attention: Option<AttentionValues<T>>,
    pub repr: Vec<T>,
}

impl<T: Scalar> ForwardOutput<T> {
    /// Arg-max class; ties resolve to the lower class index.
    pub fn predicted(&self) -> Stance {
        let mut best = 0;
        for (i, &p) in self.stance_probs.iter().enumerate() {
            if p > self.stance_probs[best] {
                best = i;
            }
        }
        Stance::from_index(best).expect("three stance classes")
    }
}

#[derive(Debug, Clone)]
pub struct Model<T> {
    spec: ModelSpec,
    store: ParamStore<T>,
    embeddings: Arc<EmbeddingMatrix<T>>,
    encoder: Encoder,
    head: StanceHead,
    domains: Vec<DomainHead>,
}

fn register_branch<T: Scalar>(
    store: &mut ParamStore<T>,
    prefix: &str,
    spec: &ModelSpec,
    rng: &mut Rng,
) -> Branch {
    let h2 = 2 * spec.hidden_dim;
    Branch {
        encoder: ConditionalParams::register(
            store,
            &format!("{prefix}enc"),
            spec.embed_dim,
            spec.hidden_dim,
            ParamGroup::Stance,
            rng,
        ),
        attention: AttentionParams::register(
            store,
            &format!("{prefix}att"),
            h2,
            h2,
            spec.attn_dim,
            ParamGroup::Stance,
            rng,
        ),
    }
}

impl<T: Scalar> Model<T> {
    /// Initializes every parameter from `seed`. Stance-path parameters are
    /// registered before the domain heads, so variants that differ only in
    /// their heads share identical stance-path values for the same seed.
    pub fn build(spec: ModelSpec, seed: u64, embeddings: Arc<EmbeddingMatrix<T>>) -> Result<Self> {
        spec.validate()?;
        if embeddings.dim() != spec.embed_dim {
            return Err(Error::Config(format!(
                "embedding dimension {} does not match model embed_dim {}",
                embeddings.dim(),
                spec.embed_dim
            )));
        }
        let mut rng = Rng::seed_from_u64(seed);
        let mut store = ParamStore::new();
        let encoder = match spec.variant {
            Variant::Concat | Variant::ConcatInvar => Encoder::Independent {
                target: BiLstmParams::register(
                    &mut store,
                    "target",
                    spec.embed_dim,
                    spec.hidden_dim,
                    ParamGroup::Stance,
                    &mut rng,
                ),
                sentence: BiLstmParams::register(
                    &mut store,
                    "sentence",
                    spec.embed_dim,
                    spec.hidden_dim,
                    ParamGroup::Stance,
                    &mut rng,
                ),
            },
            Variant::Bca | Variant::BcaInvar => Encoder::Conditional {
                invariant: register_branch(&mut store, "", &spec, &mut rng),
                specific: None,
            },
            Variant::BcaInvarSpec => Encoder::Conditional {
                invariant: register_branch(&mut store, "", &spec, &mut rng),
                specific: Some(register_branch(&mut store, "spec.", &spec, &mut rng)),
            },
        };
        let head = StanceHead {
            w_mlp: store.add_xavier(
                "stance.w_mlp",
                spec.mlp_dim,
                spec.repr_dim(),
                ParamGroup::Stance,
                &mut rng,
            ),
            w_out: store.add_xavier(
                "stance.w_out",
                spec.num_classes,
                spec.mlp_dim,
                ParamGroup::Stance,
                &mut rng,
            ),
        };
        let domains = if spec.variant.is_adversarial() {
            (0..spec.num_domains)
                .map(|i| DomainHead {
                    w: store.add_xavier(
                        format!("domain{i}.w"),
                        2,
                        spec.adversarial_dim(),
                        ParamGroup::Adversarial,
                        &mut rng,
                    ),
                    b: store.add_filled(format!("domain{i}.b"), 2, 0.0, ParamGroup::Adversarial),
                })
                .collect()
        } else {
            Vec::new()
        };
        Ok(Model {
            spec,
            store,
            embeddings,
            encoder,
            head,
            domains,
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn params(&self) -> &ParamStore<T> {
        &self.store
    }

    pub fn params_mut(&mut self) -> &mut ParamStore<T> {
        &mut self.store
    }

    pub fn embeddings(&self) -> &Arc<EmbeddingMatrix<T>> {
        &self.embeddings
    }

    pub fn stance_params(&self) -> impl Iterator<Item = &Param<T>> {
        self.store.iter().filter(|p| p.group == ParamGroup::Stance)
    }

    fn embed(
        &self,
        tape: &mut Tape<T>,
        ids: &[usize],
        what: &'static str,
        dropout: &mut Dropout<'_>,
    ) -> Result<Vec<Var>> {
        if ids.is_empty() {
            return Err(Error::argument("model_forward", format!("empty {what}")));
        }
        ids.iter()
            .map(|&id| {
                let row = self.embeddings.row(id).ok_or_else(|| {
                    Error::Data(format!(
                        "token id {id} in {what} is outside the vocabulary of {} rows",
                        self.embeddings.rows()
                    ))
                })?;
                let x = tape.constant(Tensor::vector(row.to_vec()));
                dropout.apply(tape, x)
            })
            .collect()
    }

    fn attend(
        &self,
        tape: &mut Tape<T>,
        bound: &Bound,
        branch: &Branch,
        target: &[Var],
        sentence: &[Var],
        dropout: &mut Dropout<'_>,
    ) -> Result<Attention> {
        let enc = conditional_encode(tape, bound, &branch.encoder, target, sentence, dropout)?;
        let hiddens = enc
            .hiddens
            .iter()
            .map(|&h| dropout.apply(tape, h))
            .collect::<Result<Vec<_>>>()?;
        let summary = dropout.apply(tape, enc.target_summary)?;
        additive_attention(tape, bound, &branch.attention, summary, &hiddens, None)
    }

    fn pooled(
        &self,
        tape: &mut Tape<T>,
        bound: &Bound,
        p: &BiLstmParams,
        seq: &[Var],
        dropout: &mut Dropout<'_>,
    ) -> Result<Var> {
        let hiddens = bilstm_encode(tape, bound, p, seq, dropout)?
            .into_iter()
            .map(|h| dropout.apply(tape, h))
            .collect::<Result<Vec<_>>>()?;
        max_pool_encode(tape, &hiddens, None)
    }

    /// Records the full forward pass on `tape`. `bound` must come from
    /// binding this model's parameter store (or leaves in the same order).
    pub fn forward_graph(
        &self,
        tape: &mut Tape<T>,
        bound: &Bound,
        example: &Example,
        dropout: &mut Dropout<'_>,
        link: AdversarialLink,
    ) -> Result<Graph> {
        let target = self.embed(tape, &example.target, "target", dropout)?;
        let sentence = self.embed(tape, &example.sentence, "sentence", dropout)?;

        let (repr, adversarial, attention) = match &self.encoder {
            Encoder::Conditional {
                invariant,
                specific,
            } => {
                let att = self.attend(tape, bound, invariant, &target, &sentence, dropout)?;
                let repr = match specific {
                    Some(branch) => {
                        let spec_att =
                            self.attend(tape, bound, branch, &target, &sentence, dropout)?;
                        tape.concat(&[att.s, spec_att.s])?
                    }
                    None => att.s,
                };
                (repr, att.s, Some(att))
            }
            Encoder::Independent {
                target: tp,
                sentence: sp,
            } => {
                let t = self.pooled(tape, bound, tp, &target, dropout)?;
                let s = self.pooled(tape, bound, sp, &sentence, dropout)?;
                (tape.concat(&[t, s])?, s, None)
            }
        };

        let hidden = tape.matvec(bound[self.head.w_mlp], repr)?;
        let hidden = tape.relu(hidden);
        let logits = tape.matvec(bound[self.head.w_out], hidden)?;
        let stance_probs = tape.softmax(logits, None)?;

        let mut domain_probs = Vec::with_capacity(self.domains.len());
        if !self.domains.is_empty() {
            let z = match link {
                AdversarialLink::Reversed => tape.grl(adversarial),
                AdversarialLink::Plain => adversarial,
            };
            for head in &self.domains {
                let logits = tape.matvec(bound[head.w], z)?;
                let logits = tape.add(logits, bound[head.b])?;
                domain_probs.push(tape.softmax(logits, None)?);
            }
        }
        Ok(Graph {
            stance_probs,
            domain_probs,
            attention,
            repr,
        })
    }

    pub fn forward(
        &self,
        example: &Example,
        dropout: &mut Dropout<'_>,
    ) -> Result<ForwardOutput<T>> {
        let mut tape = Tape::with_capacity(1024);
        let bound = self.store.bind(&mut tape);
        let g = self.forward_graph(
            &mut tape,
            &bound,
            example,
            dropout,
            AdversarialLink::Reversed,
        )?;
        Ok(ForwardOutput {
            stance_probs: tape.value(g.stance_probs).to_vec(),
            domain_probs: g
                .domain_probs
                .iter()
                .map(|&d| tape.value(d).to_vec())
                .collect(),
            attention: g.attention.map(|a| AttentionValues {
                s: tape.value(a.s).to_vec(),
                alpha: tape.value(a.alpha).to_vec(),
            }),
            repr: tape.value(g.repr).to_vec(),
        })
    }

    /// Evaluation-mode forward pass; consumes no randomness.
    pub fn predict(&self, example: &Example) -> Result<ForwardOutput<T>> {
        self.forward(example, &mut Dropout::eval())
    }
}
