//! Cross-entropy losses, as plain values and as tape graphs.
//!
//! Both losses are stored as non-negative cross-entropies. The optimized
//! per-example objective is `stance + λ·domain` with a gradient-reversal
//! layer in front of the domain heads; `stance − λ·domain` is only logged.

use crate::error::{Error, Result};
use crate::model::Graph;
use crate::tensor::{Scalar, Tape, Var};
use crate::Stance;

/// Probabilities are floored here before the log.
pub const PROB_FLOOR: f64 = 1e-12;

/// Domain-head class meaning "the example belongs to this domain".
pub const BELONGS: usize = 1;

pub fn stance_loss<T: Scalar>(probs: &[T], gold: Stance) -> f64 {
    -probs[gold.index()].as_f64().max(PROB_FLOOR).ln()
}

/// Mean over domains of the binary cross-entropy of membership.
pub fn domain_loss<T: Scalar>(domain_probs: &[Vec<T>], gold: usize) -> Result<f64> {
    check_domain(domain_probs.len(), gold)?;
    let total: f64 = domain_probs
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let class = if i == gold { BELONGS } else { 1 - BELONGS };
            -p[class].as_f64().max(PROB_FLOOR).ln()
        })
        .sum();
    Ok(total / domain_probs.len() as f64)
}

/// Logged combination `stance − λ·domain`.
pub fn total_loss(stance: f64, domain: f64, lambda: f64) -> f64 {
    stance - lambda * domain
}

fn check_domain(count: usize, gold: usize) -> Result<()> {
    if gold >= count {
        return Err(Error::argument(
            "domain_loss",
            format!("domain index {gold} out of range for {count} domains"),
        ));
    }
    Ok(())
}

fn nll<T: Scalar>(tape: &mut Tape<T>, probs: Var, class: usize) -> Result<Var> {
    let p = tape.pick(probs, class)?;
    let p = tape.clamp_min(p, T::of(PROB_FLOOR));
    let logp = tape.log(p)?;
    Ok(tape.neg(logp))
}

pub fn stance_loss_graph<T: Scalar>(tape: &mut Tape<T>, probs: Var, gold: Stance) -> Result<Var> {
    nll(tape, probs, gold.index())
}

pub fn domain_loss_graph<T: Scalar>(
    tape: &mut Tape<T>,
    domain_probs: &[Var],
    gold: usize,
) -> Result<Var> {
    check_domain(domain_probs.len(), gold)?;
    let terms = domain_probs
        .iter()
        .enumerate()
        .map(|(i, &p)| nll(tape, p, if i == gold { BELONGS } else { 1 - BELONGS }))
        .collect::<Result<Vec<_>>>()?;
    let stacked = tape.concat(&terms)?;
    let sum = tape.sum(stacked);
    Ok(tape.scale(sum, 1.0 / domain_probs.len() as f64))
}

/// Loss nodes of one example.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Objective {
    /// Differentiate this one.
    pub root: Var,
    pub stance: Var,
    pub domain: Option<Var>,
}

/// `stance + λ·domain` when the graph has domain heads and a gold domain,
/// otherwise the stance loss alone.
pub fn objective<T: Scalar>(
    tape: &mut Tape<T>,
    graph: &Graph,
    gold: Stance,
    domain: Option<usize>,
    lambda: f64,
) -> Result<Objective> {
    let stance = stance_loss_graph(tape, graph.stance_probs, gold)?;
    match domain {
        Some(d) if !graph.domain_probs.is_empty() => {
            let dl = domain_loss_graph(tape, &graph.domain_probs, d)?;
            let weighted = tape.scale(dl, lambda);
            let root = tape.add(stance, weighted)?;
            Ok(Objective {
                root,
                stance,
                domain: Some(dl),
            })
        }
        _ => Ok(Objective {
            root: stance,
            stance,
            domain: None,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Tensor;

    #[test]
    fn stance_loss_examples() {
        let u = [1.0 / 3.0; 3];
        assert!((stance_loss(&u, Stance::None) - 3f64.ln()).abs() < 1e-12);
        assert_eq!(stance_loss(&[0.0, 1.0, 0.0], Stance::Against), 0.0);
        let floored = stance_loss(&[0.0, 1.0, 0.0], Stance::Favor);
        assert!((floored - 27.631_021_115_928_547).abs() < 1e-9);
    }

    #[test]
    fn domain_loss_examples() {
        let half = vec![vec![0.5, 0.5]; 4];
        assert!((domain_loss(&half, 2).unwrap() - 2f64.ln()).abs() < 1e-12);
        let perfect = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0]];
        assert_eq!(domain_loss(&perfect, 1).unwrap(), 0.0);
        assert_eq!(domain_loss(&[vec![0.0, 1.0]], 0).unwrap(), 0.0);
        assert!(domain_loss(&half, 4).is_err());
    }

    #[test]
    fn total_loss_examples() {
        assert!((total_loss(1.0, 0.5, 0.1) - 0.95).abs() < 1e-15);
        assert_eq!(total_loss(0.7, 3.0, 0.0), 0.7);
        assert_eq!(total_loss(0.0, 0.0, 0.4), 0.0);
    }

    #[test]
    fn graph_losses_match_values() {
        let mut t = Tape::<f64>::new();
        let p = [0.2, 0.5, 0.3];
        let probs = t.leaf(Tensor::vector(p.to_vec()));
        let l = stance_loss_graph(&mut t, probs, Stance::Favor).unwrap();
        assert_eq!(t.scalar(l), stance_loss(&p, Stance::Favor));
        let g = t.backward(l).unwrap();
        assert_eq!(g.wrt(probs), vec![-1.0 / 0.2, 0.0, 0.0]);

        let dp = [vec![0.3, 0.7], vec![0.9, 0.1], vec![0.6, 0.4]];
        let vars: Vec<_> = dp
            .iter()
            .map(|d| t.leaf(Tensor::vector(d.clone())))
            .collect();
        let dl = domain_loss_graph(&mut t, &vars, 0).unwrap();
        assert!((t.scalar(dl) - domain_loss(&dp, 0).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn zero_probability_gradient_is_finite() {
        let mut t = Tape::<f64>::new();
        let probs = t.leaf(Tensor::vector(vec![0.0, 1.0, 0.0]));
        let l = stance_loss_graph(&mut t, probs, Stance::Favor).unwrap();
        let g = t.backward(l).unwrap();
        assert!(g.wrt(probs).iter().all(|x| x.is_finite()));
    }
}
