//! Additive attention: `aᵢ = vᵀ tanh(W [q; hᵢ])`, `α = softmax(a)`,
//! `s = Σ αᵢ hᵢ`. No bias term inside the tanh.

use super::params::{xavier_uniform, Bound, ParamGroup, ParamId, ParamStore};
use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tape, Tensor, Var};
use crate::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AttentionParams {
    pub query_dim: usize,
    pub key_dim: usize,
    pub attn_dim: usize,
    pub w: ParamId,
    pub v: ParamId,
}

impl AttentionParams {
    pub fn register<T: Scalar>(
        store: &mut ParamStore<T>,
        prefix: &str,
        query_dim: usize,
        key_dim: usize,
        attn_dim: usize,
        group: ParamGroup,
        rng: &mut Rng,
    ) -> Self {
        let w = store.add_xavier(
            format!("{prefix}.w"),
            attn_dim,
            query_dim + key_dim,
            group,
            rng,
        );
        let v = xavier_uniform::<T>(attn_dim, 1, rng).into_data();
        let v = store.add(format!("{prefix}.v"), Tensor::vector(v), group);
        AttentionParams {
            query_dim,
            key_dim,
            attn_dim,
            w,
            v,
        }
    }

    pub fn scalar_count(query_dim: usize, key_dim: usize, attn_dim: usize) -> usize {
        attn_dim * (query_dim + key_dim) + attn_dim
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Attention {
    /// Attended sentence representation.
    pub s: Var,
    /// Weights over sentence positions; exactly zero where masked.
    pub alpha: Var,
}

pub fn additive_attention<T: Scalar>(
    tape: &mut Tape<T>,
    bound: &Bound,
    p: &AttentionParams,
    query: Var,
    keys: &[Var],
    mask: Option<&[bool]>,
) -> Result<Attention> {
    if keys.is_empty() {
        return Err(Error::argument(
            "additive_attention",
            "no positions to attend",
        ));
    }
    let mut scores = Vec::with_capacity(keys.len());
    for &h in keys {
        let joint = tape.concat(&[query, h])?;
        let proj = tape.matvec(bound[p.w], joint)?;
        let act = tape.tanh(proj);
        let weighted = tape.mul(bound[p.v], act)?;
        scores.push(tape.sum(weighted));
    }
    let scores = tape.concat(&scores)?;
    let alpha = tape.softmax(scores, mask)?;
    let s = tape.weighted_sum(alpha, keys)?;
    Ok(Attention { s, alpha })
}
