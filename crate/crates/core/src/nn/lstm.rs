//! Single-layer LSTM with input, forget and output gates and a tanh
//! candidate:
//!
//! ```text
//! z = [x; h_prev]
//! i = σ(W_i z + b_i)   f = σ(W_f z + b_f)   o = σ(W_o z + b_o)
//! g = tanh(W_g z + b_g)
//! c = f ∘ c_prev + i ∘ g
//! h = o ∘ tanh(c)
//! ```

use super::dropout::Dropout;
use super::params::{Bound, ParamGroup, ParamId, ParamStore};
use crate::error::{Error, Result};
use crate::tensor::{Scalar, Shape, Tape, Tensor, Var};
use crate::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LstmParams {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub w_input: ParamId,
    pub w_forget: ParamId,
    pub w_output: ParamId,
    pub w_cell: ParamId,
    pub b_input: ParamId,
    pub b_forget: ParamId,
    pub b_output: ParamId,
    pub b_cell: ParamId,
}

impl LstmParams {
    /// Xavier-uniform weights, zero biases except the forget gate at 1.0.
    pub fn register<T: Scalar>(
        store: &mut ParamStore<T>,
        prefix: &str,
        input_dim: usize,
        hidden_dim: usize,
        group: ParamGroup,
        rng: &mut Rng,
    ) -> Self {
        let cols = input_dim + hidden_dim;
        let mut w = |gate: &str| {
            store.add_xavier(format!("{prefix}.w_{gate}"), hidden_dim, cols, group, rng)
        };
        let (w_input, w_forget, w_output, w_cell) =
            (w("input"), w("forget"), w("output"), w("cell"));
        LstmParams {
            input_dim,
            hidden_dim,
            w_input,
            w_forget,
            w_output,
            w_cell,
            b_input: store.add_filled(format!("{prefix}.b_input"), hidden_dim, 0.0, group),
            b_forget: store.add_filled(format!("{prefix}.b_forget"), hidden_dim, 1.0, group),
            b_output: store.add_filled(format!("{prefix}.b_output"), hidden_dim, 0.0, group),
            b_cell: store.add_filled(format!("{prefix}.b_cell"), hidden_dim, 0.0, group),
        }
    }

    /// Scalars owned by one LSTM: four gate matrices plus four biases.
    pub fn scalar_count(input_dim: usize, hidden_dim: usize) -> usize {
        4 * hidden_dim * (input_dim + hidden_dim) + 4 * hidden_dim
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LstmState {
    pub h: Var,
    pub c: Var,
}

impl LstmState {
    pub fn zeros<T: Scalar>(tape: &mut Tape<T>, hidden_dim: usize) -> Self {
        LstmState {
            h: tape.constant(Tensor::zeros(Shape::Vector(hidden_dim))),
            c: tape.constant(Tensor::zeros(Shape::Vector(hidden_dim))),
        }
    }
}

fn expect_len<T: Scalar>(tape: &Tape<T>, v: Var, len: usize) -> Result<()> {
    let shape = tape.shape(v);
    if shape != Shape::Vector(len) {
        return Err(Error::Shape {
            op: "lstm_step",
            lhs: Shape::Vector(len),
            rhs: shape,
        });
    }
    Ok(())
}

pub fn lstm_step<T: Scalar>(
    tape: &mut Tape<T>,
    bound: &Bound,
    p: &LstmParams,
    x: Var,
    prev: LstmState,
) -> Result<LstmState> {
    expect_len(tape, x, p.input_dim)?;
    expect_len(tape, prev.h, p.hidden_dim)?;
    expect_len(tape, prev.c, p.hidden_dim)?;
    let z = tape.concat(&[x, prev.h])?;
    let gate = |tape: &mut Tape<T>, w: ParamId, b: ParamId| -> Result<Var> {
        let pre = tape.matvec(bound[w], z)?;
        tape.add(pre, bound[b])
    };
    let i = gate(tape, p.w_input, p.b_input)?;
    let f = gate(tape, p.w_forget, p.b_forget)?;
    let o = gate(tape, p.w_output, p.b_output)?;
    let g = gate(tape, p.w_cell, p.b_cell)?;
    let i = tape.sigmoid(i);
    let f = tape.sigmoid(f);
    let o = tape.sigmoid(o);
    let g = tape.tanh(g);
    let keep = tape.mul(f, prev.c)?;
    let write = tape.mul(i, g)?;
    let c = tape.add(keep, write)?;
    let squashed = tape.tanh(c);
    let h = tape.mul(o, squashed)?;
    Ok(LstmState { h, c })
}

/// Runs the LSTM over `seq`, right to left when `reverse` is set. States are
/// returned in sequence-position order either way; the first processed
/// position is conditioned on `init`. Recurrent dropout draws a fresh mask
/// for the hidden vector entering every step.
pub fn run_lstm<T: Scalar>(
    tape: &mut Tape<T>,
    bound: &Bound,
    p: &LstmParams,
    seq: &[Var],
    init: LstmState,
    reverse: bool,
    dropout: &mut Dropout<'_>,
) -> Result<Vec<LstmState>> {
    if seq.is_empty() {
        return Err(Error::argument("run_lstm", "empty sequence"));
    }
    let mut states = vec![init; seq.len()];
    let mut state = init;
    let order: Box<dyn Iterator<Item = usize>> = if reverse {
        Box::new((0..seq.len()).rev())
    } else {
        Box::new(0..seq.len())
    };
    for pos in order {
        let h = dropout.apply(tape, state.h)?;
        state = lstm_step(tape, bound, p, seq[pos], LstmState { h, c: state.c })?;
        states[pos] = state;
    }
    Ok(states)
}
