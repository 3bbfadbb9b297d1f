//! Gradient-check suite: every tape op, every layer, the losses and the
//! full per-example objective of each variant, at tiny sizes in `f64`.

use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng as _, SeedableRng};

use crate::data::{EmbeddingMatrix, Example, Vocabulary};
use crate::error::Result;
use crate::model::{AdversarialLink, Model, ModelSpec, Variant};
use crate::nn::{
    additive_attention, bilstm_encode, conditional_encode, lstm_step, max_pool_encode,
    AttentionParams, BiLstmParams, Bound, ConditionalParams, Dropout, LstmParams, LstmState,
    ParamGroup, ParamStore,
};
use crate::tensor::{check_gradients_against, Tape, Tensor, Var};
use crate::train::{domain_loss_graph, objective, stance_loss_graph};
use crate::{Rng, Stance};

/// Maximum accepted relative error.
pub const TOLERANCE: f64 = 1e-4;
/// Central-difference step.
pub const STEP: f64 = 1e-3;
/// Domain-loss weight used in the full-objective checks.
const CHECK_LAMBDA: f64 = 0.7;

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentResult {
    pub name: String,
    pub max_rel_error: f64,
    pub coordinates: usize,
    /// `(parameter index, coordinate, analytic, numeric)` of the worst entry.
    pub worst: Option<(usize, usize, f64, f64)>,
}

impl ComponentResult {
    pub fn passed(&self) -> bool {
        self.max_rel_error < TOLERANCE
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckSummary {
    pub components: Vec<ComponentResult>,
    pub elapsed: Duration,
}

impl GradcheckSummary {
    pub fn passed(&self) -> bool {
        self.components.iter().all(ComponentResult::passed)
    }

    pub fn failures(&self) -> Vec<&str> {
        self.components
            .iter()
            .filter(|c| !c.passed())
            .map(|c| c.name.as_str())
            .collect()
    }
}

type GraphFn = Box<dyn Fn(&mut Tape<f64>, &[Var]) -> Result<Var>>;
type ReferenceFn = Box<dyn Fn(usize, &mut Tape<f64>, &[Var]) -> Result<Var>>;
type UnaryFn = fn(&mut Tape<f64>, Var) -> Result<Var>;

struct Case {
    name: String,
    params: Vec<Tensor<f64>>,
    graph: GraphFn,
    /// Per-parameter scalar whose finite difference the tape gradient must
    /// match; defaults to the graph itself.
    reference: Option<ReferenceFn>,
}

fn case(
    name: &str,
    params: Vec<Tensor<f64>>,
    graph: impl Fn(&mut Tape<f64>, &[Var]) -> Result<Var> + 'static,
) -> Case {
    Case {
        name: name.to_string(),
        params,
        graph: Box::new(graph),
        reference: None,
    }
}

struct Fixture(Rng);

impl Fixture {
    fn vector(&mut self, n: usize, lo: f64, hi: f64) -> Tensor<f64> {
        Tensor::vector((0..n).map(|_| self.0.gen_range(lo..hi)).collect())
    }

    fn matrix(&mut self, r: usize, c: usize) -> Tensor<f64> {
        Tensor::matrix(
            r,
            c,
            (0..r * c).map(|_| self.0.gen_range(-1.0..1.0)).collect(),
        )
    }

    /// Values bounded away from zero, for kinked ops.
    fn away_from_zero(&mut self, n: usize) -> Tensor<f64> {
        Tensor::vector(
            (0..n)
                .map(|_| {
                    let x: f64 = self.0.gen_range(0.2..1.0);
                    if self.0.gen_bool(0.5) {
                        x
                    } else {
                        -x
                    }
                })
                .collect(),
        )
    }
}

/// Fixed projection so every output coordinate gets a distinct weight.
fn project(t: &mut Tape<f64>, y: Var) -> Result<Var> {
    let n = t.value(y).len();
    let c = t.constant(Tensor::vector(
        (0..n).map(|i| 0.3 + 0.17 * i as f64).collect(),
    ));
    let prod = t.mul(c, y)?;
    Ok(t.sum(prod))
}

fn project_all(t: &mut Tape<f64>, ys: &[Var]) -> Result<Var> {
    let joined = t.concat(ys)?;
    project(t, joined)
}

fn op_cases(fx: &mut Fixture) -> Vec<Case> {
    let mut cases = Vec::new();
    let unary: [(&str, UnaryFn, f64, f64); 6] = [
        ("tanh", |t, x| Ok(t.tanh(x)), -2.0, 2.0),
        ("sigmoid", |t, x| Ok(t.sigmoid(x)), -2.0, 2.0),
        ("exp", |t, x| Ok(t.exp(x)), -1.0, 1.0),
        ("log", |t, x| t.log(x), 0.5, 2.0),
        ("negate", |t, x| Ok(t.neg(x)), -1.0, 1.0),
        ("scale", |t, x| Ok(t.scale(x, -1.7)), -1.0, 1.0),
    ];
    for (name, op, lo, hi) in unary {
        cases.push(case(name, vec![fx.vector(4, lo, hi)], move |t, v| {
            let y = op(t, v[0])?;
            project(t, y)
        }));
    }
    cases.push(case("relu", vec![fx.away_from_zero(4)], |t, v| {
        let y = t.relu(v[0]);
        project(t, y)
    }));
    for (name, f) in [
        (
            "add",
            Tape::add as fn(&mut Tape<f64>, Var, Var) -> Result<Var>,
        ),
        ("sub", Tape::sub),
        ("mul", Tape::mul),
    ] {
        cases.push(case(
            name,
            vec![fx.vector(3, -1.0, 1.0), fx.vector(3, -1.0, 1.0)],
            move |t, v| {
                let y = f(t, v[0], v[1])?;
                project(t, y)
            },
        ));
    }
    cases.push(case(
        "matvec",
        vec![fx.matrix(3, 4), fx.vector(4, -1.0, 1.0)],
        |t, v| {
            let y = t.matvec(v[0], v[1])?;
            project(t, y)
        },
    ));
    cases.push(case(
        "concat",
        vec![fx.vector(2, -1.0, 1.0), fx.vector(3, -1.0, 1.0)],
        project_all,
    ));
    cases.push(case("softmax", vec![fx.vector(4, -2.0, 2.0)], |t, v| {
        let y = t.softmax(v[0], None)?;
        project(t, y)
    }));
    cases.push(case(
        "masked_softmax",
        vec![fx.vector(4, -2.0, 2.0)],
        |t, v| {
            let y = t.softmax(v[0], Some(&[true, false, true, true]))?;
            project(t, y)
        },
    ));
    cases.push(case(
        "weighted_sum",
        vec![
            fx.vector(3, 0.1, 1.0),
            fx.vector(2, -1.0, 1.0),
            fx.vector(2, -1.0, 1.0),
            fx.vector(2, -1.0, 1.0),
        ],
        |t, v| {
            let y = t.weighted_sum(v[0], &v[1..])?;
            project(t, y)
        },
    ));
    // Well-separated values keep the arg-max stable under perturbation.
    cases.push(case(
        "max_pool",
        vec![
            Tensor::vector(vec![0.9, -0.4, 0.1]),
            Tensor::vector(vec![0.2, 0.5, -0.7]),
            Tensor::vector(vec![-0.3, 0.0, 0.6]),
        ],
        |t, v| {
            let y = t.max_pool(v, None)?;
            project(t, y)
        },
    ));
    cases.push(case("scale_by", vec![fx.vector(4, -1.0, 1.0)], |t, v| {
        let y = t.scale_by(v[0], vec![2.0, 0.0, -1.5, 0.5])?;
        project(t, y)
    }));
    cases.push(case("sum", vec![fx.vector(4, -1.0, 1.0)], |t, v| {
        let s = t.sum(v[0]);
        let sq = t.mul(s, s)?;
        Ok(t.sum(sq))
    }));
    cases.push(case("pick", vec![fx.vector(4, -1.0, 1.0)], |t, v| {
        let p = t.pick(v[0], 2)?;
        let e = t.exp(p);
        Ok(t.sum(e))
    }));
    cases.push(case(
        "clamp_min",
        vec![Tensor::vector(vec![0.8, 0.05, 1.3, 0.02])],
        |t, v| {
            let y = t.clamp_min(v[0], 0.1);
            project(t, y)
        },
    ));
    // The reversed gradient is the negated derivative of the identity.
    let mut grl = case("grl", vec![fx.vector(3, -1.0, 1.0)], |t, v| {
        let y = t.grl(v[0]);
        let y = t.tanh(y);
        project(t, y)
    });
    grl.reference = Some(Box::new(|_, t, v| {
        let y = t.tanh(v[0]);
        let p = project(t, y)?;
        Ok(t.neg(p))
    }));
    cases.push(grl);
    cases
}

/// Builds a case whose parameters are a registered store, so the graph can
/// index them through a [`Bound`].
fn store_case(
    name: &str,
    store: &ParamStore<f64>,
    extra: Vec<Tensor<f64>>,
    graph: impl Fn(&mut Tape<f64>, &Bound, &[Var]) -> Result<Var> + 'static,
) -> Case {
    let n = store.len();
    let mut params: Vec<Tensor<f64>> = store.iter().map(|p| p.value.clone()).collect();
    params.extend(extra);
    case(name, params, move |t, v| {
        let bound = Bound::from_vars(v[..n].to_vec());
        graph(t, &bound, &v[n..])
    })
}

fn layer_cases(fx: &mut Fixture) -> Vec<Case> {
    let (e, h) = (3, 2);
    let mut rng = Rng::seed_from_u64(31);
    let mut cases = Vec::new();
    let seq =
        |fx: &mut Fixture, n: usize| (0..n).map(|_| fx.vector(e, -1.0, 1.0)).collect::<Vec<_>>();

    let mut store = ParamStore::new();
    let lstm = LstmParams::register(&mut store, "lstm", e, h, ParamGroup::Stance, &mut rng);
    let mut inputs = seq(fx, 1);
    inputs.push(fx.vector(h, -1.0, 1.0));
    inputs.push(fx.vector(h, -1.0, 1.0));
    cases.push(store_case("lstm_step", &store, inputs, move |t, b, v| {
        let s = lstm_step(t, b, &lstm, v[0], LstmState { h: v[1], c: v[2] })?;
        project_all(t, &[s.h, s.c])
    }));

    let mut store = ParamStore::new();
    let bi = BiLstmParams::register(&mut store, "bi", e, h, ParamGroup::Stance, &mut rng);
    cases.push(store_case("bilstm", &store, seq(fx, 3), move |t, b, v| {
        let hs = bilstm_encode(t, b, &bi, v, &mut Dropout::eval())?;
        project_all(t, &hs)
    }));

    let mut store = ParamStore::new();
    let cond = ConditionalParams::register(&mut store, "cond", e, h, ParamGroup::Stance, &mut rng);
    let inputs = seq(fx, 5);
    cases.push(store_case(
        "conditional_encoder",
        &store,
        inputs,
        move |t, b, v| {
            let enc = conditional_encode(t, b, &cond, &v[..2], &v[2..], &mut Dropout::eval())?;
            let mut outs = enc.hiddens.clone();
            outs.push(enc.target_summary);
            project_all(t, &outs)
        },
    ));

    let mut store = ParamStore::new();
    let att =
        AttentionParams::register(&mut store, "att", 2, 2 * h, 4, ParamGroup::Stance, &mut rng);
    let mut inputs = vec![fx.vector(2, -1.0, 1.0)];
    inputs.extend((0..3).map(|_| fx.vector(2 * h, -1.0, 1.0)));
    cases.push(store_case("attention", &store, inputs, move |t, b, v| {
        let out = additive_attention(t, b, &att, v[0], &v[1..], None)?;
        project_all(t, &[out.s, out.alpha])
    }));

    cases.push(case(
        "max_pool_encoder",
        vec![
            Tensor::vector(vec![0.9, -0.4, 0.1, 0.3]),
            Tensor::vector(vec![0.2, 0.5, -0.7, -0.1]),
            Tensor::vector(vec![-0.3, 0.0, 0.6, 0.7]),
        ],
        |t, v| {
            let y = max_pool_encode(t, v, Some(&[true, true, true]))?;
            project(t, y)
        },
    ));

    cases.push(case("dropout", vec![fx.vector(4, -1.0, 1.0)], |t, v| {
        let mut rng = Rng::seed_from_u64(5);
        let y = Dropout::train(0.4, &mut rng)?.apply(t, v[0])?;
        let y = t.tanh(y);
        project(t, y)
    }));

    cases.push(case(
        "stance_loss",
        vec![fx.vector(3, -1.0, 1.0)],
        |t, v| {
            let p = t.softmax(v[0], None)?;
            stance_loss_graph(t, p, Stance::Against)
        },
    ));

    cases.push(case(
        "domain_loss",
        (0..3).map(|_| fx.vector(2, -1.0, 1.0)).collect(),
        |t, v| {
            let probs = v
                .iter()
                .map(|&x| t.softmax(x, None))
                .collect::<Result<Vec<_>>>()?;
            domain_loss_graph(t, &probs, 1)
        },
    ));
    cases
}

fn model_case(variant: Variant) -> Result<Case> {
    let vocab = Vocabulary::from_tokens(["a", "b", "c", "d"]);
    let mut rng = Rng::seed_from_u64(77);
    let rows = (0..vocab.len() * 3)
        .map(|_| rng.gen_range(-1.0..1.0))
        .collect();
    let emb = Arc::new(EmbeddingMatrix::from_rows(3, rows));
    let mut spec = ModelSpec::new(variant, 3, 2, 3);
    spec.attn_dim = 3;
    let model = Arc::new(Model::build(spec, 13, emb)?);
    let example = Example {
        sentence: vec![2, 4, 5],
        target: vec![3, 1],
        stance: Stance::Against,
        domain: Some(1),
        tokens: Vec::new(),
        target_text: String::new(),
    };
    let groups: Vec<ParamGroup> = model.params().iter().map(|p| p.group).collect();
    let params = model.params().iter().map(|p| p.value.clone()).collect();

    let run = {
        let (model, example) = (model.clone(), example.clone());
        move |t: &mut Tape<f64>, v: &[Var], link: AdversarialLink, sign: f64| -> Result<Var> {
            let bound = Bound::from_vars(v.to_vec());
            let mut rng = Rng::seed_from_u64(17);
            let mut dropout = Dropout::train(0.2, &mut rng)?;
            let g = model.forward_graph(t, &bound, &example, &mut dropout, link)?;
            objective(t, &g, example.stance, example.domain, sign * CHECK_LAMBDA).map(|o| o.root)
        }
    };
    let reference_run = run.clone();
    Ok(Case {
        name: format!("model:{variant}"),
        params,
        graph: Box::new(move |t, v| run(t, v, AdversarialLink::Reversed, 1.0)),
        // Stance-path parameters descend stance − λ·domain; the domain
        // heads descend stance + λ·domain.
        reference: Some(Box::new(move |i, t, v| {
            let sign = match groups[i] {
                ParamGroup::Stance => -1.0,
                ParamGroup::Adversarial => 1.0,
            };
            reference_run(t, v, AdversarialLink::Plain, sign)
        })),
    })
}

fn all_cases() -> Result<Vec<Case>> {
    let mut fx = Fixture(Rng::seed_from_u64(2024));
    let mut cases = op_cases(&mut fx);
    cases.extend(layer_cases(&mut fx));
    for v in Variant::ALL {
        cases.push(model_case(v)?);
    }
    Ok(cases)
}

/// Runs every check. `fault` corrupts the backward rule of one unary op
/// (negative control).
pub fn run_gradcheck(fault: Option<&'static str>) -> Result<GradcheckSummary> {
    let start = Instant::now();
    let mut components = Vec::new();
    for c in all_cases()? {
        let report = match &c.reference {
            Some(r) => check_gradients_against(&c.graph, r, &c.params, STEP, fault)?,
            None => check_gradients_against(
                &c.graph,
                |_, t, v| (c.graph)(t, v),
                &c.params,
                STEP,
                fault,
            )?,
        };
        components.push(ComponentResult {
            name: c.name,
            max_rel_error: report.max_rel_error,
            coordinates: report.coordinates,
            worst: report
                .worst
                .zip(report.worst_values)
                .map(|((p, c), (a, n))| (p, c, a, n)),
        });
    }
    Ok(GradcheckSummary {
        components,
        elapsed: start.elapsed(),
    })
}

/// Component names in run order.
pub fn component_names() -> Result<Vec<String>> {
    Ok(all_cases()?.into_iter().map(|c| c.name).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Shape;

    #[test]
    fn suite_passes_and_fault_is_named() {
        let ok = run_gradcheck(None).unwrap();
        for c in &ok.components {
            assert!(c.passed(), "{} {:e}", c.name, c.max_rel_error);
        }
        let bad = run_gradcheck(Some("tanh")).unwrap();
        assert!(bad.failures().contains(&"tanh"));
        assert!(!bad.failures().contains(&"sigmoid"));
    }

    #[test]
    fn inputs_stay_small() {
        for c in all_cases().unwrap() {
            for p in &c.params {
                if let Shape::Matrix(r, cols) = p.shape() {
                    assert!(r <= 4 && cols <= 8, "{}", c.name);
                }
            }
        }
    }
}
