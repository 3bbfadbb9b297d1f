use proptest::prelude::*;
use rand::{Rng as _, SeedableRng};
use stancegen::tensor::{check_gradients_against, finite_difference_check, Tape, Tensor, Var};
use stancegen::{Result, Rng};

const TRIALS: usize = 100;
const STEP: f64 = 1e-3;
const MAX_REL: f64 = 1e-5;

fn vec_in(rng: &mut Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(lo..hi)).collect()
}

/// Reduces `y` to a scalar through a fixed random projection so every
/// output coordinate contributes a distinct weight.
fn project(t: &mut Tape<f64>, y: Var, weights: &[f64]) -> Result<Var> {
    let w = t.constant(Tensor::vector(weights[..t.value(y).len()].to_vec()));
    let p = t.mul(y, w)?;
    Ok(t.sum(p))
}

type Case = Box<dyn Fn(&mut Tape<f64>, &[Var], &[f64]) -> Result<Var>>;

fn unary(f: fn(&mut Tape<f64>, Var) -> Var) -> Case {
    Box::new(move |t, v, w| {
        let y = f(t, v[0]);
        project(t, y, w)
    })
}

#[test]
fn every_op_matches_finite_differences_on_random_inputs() {
    let mut rng = Rng::seed_from_u64(7);
    let cases: Vec<(&str, Case)> = vec![
        ("tanh", unary(Tape::tanh)),
        ("sigmoid", unary(Tape::sigmoid)),
        ("exp", unary(Tape::exp)),
        ("neg", unary(Tape::neg)),
        ("relu", unary(Tape::relu)),
        (
            "scale",
            Box::new(|t, v, w| {
                let y = t.scale(v[0], -1.7);
                project(t, y, w)
            }),
        ),
        (
            "log",
            Box::new(|t, v, w| {
                let s = t.sigmoid(v[0]);
                let y = t.log(s)?;
                project(t, y, w)
            }),
        ),
        (
            "add",
            Box::new(|t, v, w| {
                let y = t.add(v[0], v[1])?;
                project(t, y, w)
            }),
        ),
        (
            "sub",
            Box::new(|t, v, w| {
                let y = t.sub(v[0], v[1])?;
                project(t, y, w)
            }),
        ),
        (
            "mul",
            Box::new(|t, v, w| {
                let y = t.mul(v[0], v[1])?;
                project(t, y, w)
            }),
        ),
        (
            "matvec",
            Box::new(|t, v, w| {
                let y = t.matvec(v[2], v[0])?;
                project(t, y, w)
            }),
        ),
        (
            "concat",
            Box::new(|t, v, w| {
                let y = t.concat(&[v[0], v[1], v[0]])?;
                project(t, y, w)
            }),
        ),
        (
            "softmax",
            Box::new(|t, v, w| {
                let y = t.softmax(v[0], None)?;
                project(t, y, w)
            }),
        ),
        (
            "masked_softmax",
            Box::new(|t, v, w| {
                let n = t.value(v[0]).len();
                let mask: Vec<bool> = (0..n).map(|i| i != 1).collect();
                let y = t.softmax(v[0], Some(&mask))?;
                project(t, y, w)
            }),
        ),
        (
            "weighted_sum",
            Box::new(|t, v, w| {
                let n = t.value(v[0]).len();
                let y = t.weighted_sum(v[0], &[v[1]; 4][..n])?;
                project(t, y, w)
            }),
        ),
        (
            "max_pool",
            Box::new(|t, v, w| {
                let y = t.max_pool(&[v[0], v[1]], None)?;
                project(t, y, w)
            }),
        ),
        (
            "scale_by",
            Box::new(|t, v, w| {
                let n = t.value(v[0]).len();
                let y = t.scale_by(v[0], (0..n).map(|i| 0.5 + i as f64).collect())?;
                project(t, y, w)
            }),
        ),
        ("pick", Box::new(|t, v, _| t.pick(v[0], 0))),
    ];
    let mut worst = 0.0f64;
    for (name, f) in &cases {
        for trial in 0..TRIALS {
            let n = rng.gen_range(1..=4);
            // Keep relu and max_pool away from their kinks.
            let mut a = vec_in(&mut rng, n, -2.0, 2.0);
            for x in &mut a {
                if x.abs() < 0.05 {
                    *x += 0.1;
                }
            }
            let b: Vec<f64> = a
                .iter()
                .map(|x| {
                    let gap = rng.gen_range(0.2..1.0);
                    if rng.gen() {
                        x + gap
                    } else {
                        x - gap
                    }
                })
                .collect();
            let rows = rng.gen_range(1..=4);
            let m = vec_in(&mut rng, rows * n, -1.0, 1.0);
            let weights = vec_in(&mut rng, 12, -1.0, 1.0);
            let params = [
                Tensor::vector(a),
                Tensor::vector(b),
                Tensor::matrix(rows, n, m),
            ];
            let report = finite_difference_check(|t, v| f(t, v, &weights), &params, STEP).unwrap();
            assert!(
                report.max_rel_error < MAX_REL,
                "{name} trial {trial}: {report:?}"
            );
            worst = worst.max(report.max_rel_error);
        }
    }
    assert!(worst < MAX_REL);
}

#[test]
fn grl_gradient_is_the_negated_plain_gradient() {
    let mut rng = Rng::seed_from_u64(8);
    for _ in 0..TRIALS {
        let n = rng.gen_range(1..=4);
        let x = Tensor::vector(vec_in(&mut rng, n, -2.0, 2.0));
        let report = check_gradients_against(
            |t: &mut Tape<f64>, v: &[Var]| {
                let g = t.grl(v[0]);
                let y = t.tanh(g);
                Ok(t.sum(y))
            },
            |_, t: &mut Tape<f64>, v: &[Var]| {
                let y = t.tanh(v[0]);
                let s = t.sum(y);
                Ok(t.neg(s))
            },
            &[x],
            STEP,
            None,
        )
        .unwrap();
        assert!(report.max_rel_error < MAX_REL, "{report:?}");
    }
}

fn two_consumer_grads(x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let run = |which: u8| {
        let mut t = Tape::<f64>::new();
        let v = t.leaf(Tensor::vector(x.to_vec()));
        let a = t.tanh(v);
        let a = t.sum(a);
        let b = t.mul(v, v).unwrap();
        let b = t.sum(b);
        let root = match which {
            0 => a,
            1 => b,
            _ => t.add(a, b).unwrap(),
        };
        t.backward(root).unwrap().wrt(v)
    };
    let (ga, gb, both) = (run(0), run(1), run(2));
    (ga.iter().zip(&gb).map(|(p, q)| p + q).collect(), both)
}

proptest! {
    #[test]
    fn softmax_is_a_distribution(logits in prop::collection::vec(-60.0f64..60.0, 1..12)) {
        let mut t = Tape::<f64>::new();
        let x = t.leaf(Tensor::vector(logits));
        let y = t.softmax(x, None).unwrap();
        let p = t.value(y);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(p.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn fan_out_gradients_add(x in prop::collection::vec(-3.0f64..3.0, 1..6)) {
        let (sum, both) = two_consumer_grads(&x);
        for (a, b) in sum.iter().zip(&both) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn forward_and_backward_are_bitwise_repeatable(
        x in prop::collection::vec(-3.0f64..3.0, 1..6),
        w in prop::collection::vec(-1.0f64..1.0, 36),
    ) {
        let run = || {
            let mut t = Tape::<f64>::new();
            let n = x.len();
            let v = t.leaf(Tensor::vector(x.clone()));
            let m = t.leaf(Tensor::matrix(n, n, w[..n * n].to_vec()));
            let h = t.matvec(m, v).unwrap();
            let h = t.tanh(h);
            let p = t.softmax(h, None).unwrap();
            let s = t.sum(p);
            let l = t.log(s).unwrap();
            let g = t.backward(l).unwrap();
            (t.value(p).to_vec(), g.wrt(v), g.wrt(m))
        };
        let (a, b) = (run(), run());
        prop_assert!(a.0.iter().zip(&b.0).all(|(p, q)| p.to_bits() == q.to_bits()));
        prop_assert!(a.1.iter().zip(&b.1).all(|(p, q)| p.to_bits() == q.to_bits()));
        prop_assert!(a.2.iter().zip(&b.2).all(|(p, q)| p.to_bits() == q.to_bits()));
    }
}
