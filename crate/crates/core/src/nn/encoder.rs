//! Bidirectional encoders: independent (both directions start from zero) and
//! conditional, where the sentence LSTMs start from the target LSTMs' final
//! states.

use super::dropout::Dropout;
use super::lstm::{run_lstm, LstmParams, LstmState};
use super::params::{Bound, ParamGroup, ParamStore};
use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tape, Var};
use crate::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BiLstmParams {
    pub forward: LstmParams,
    pub backward: LstmParams,
}

impl BiLstmParams {
    pub fn register<T: Scalar>(
        store: &mut ParamStore<T>,
        prefix: &str,
        input_dim: usize,
        hidden_dim: usize,
        group: ParamGroup,
        rng: &mut Rng,
    ) -> Self {
        BiLstmParams {
            forward: LstmParams::register(
                store,
                &format!("{prefix}.fwd"),
                input_dim,
                hidden_dim,
                group,
                rng,
            ),
            backward: LstmParams::register(
                store,
                &format!("{prefix}.bwd"),
                input_dim,
                hidden_dim,
                group,
                rng,
            ),
        }
    }

    pub fn hidden_dim(&self) -> usize {
        self.forward.hidden_dim
    }
}

/// Target and sentence BiLSTMs of a conditional encoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConditionalParams {
    pub target: BiLstmParams,
    pub sentence: BiLstmParams,
}

impl ConditionalParams {
    pub fn register<T: Scalar>(
        store: &mut ParamStore<T>,
        prefix: &str,
        input_dim: usize,
        hidden_dim: usize,
        group: ParamGroup,
        rng: &mut Rng,
    ) -> Self {
        ConditionalParams {
            target: BiLstmParams::register(
                store,
                &format!("{prefix}.target"),
                input_dim,
                hidden_dim,
                group,
                rng,
            ),
            sentence: BiLstmParams::register(
                store,
                &format!("{prefix}.sentence"),
                input_dim,
                hidden_dim,
                group,
                rng,
            ),
        }
    }

    pub fn hidden_dim(&self) -> usize {
        self.sentence.hidden_dim()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConditionalEncoding {
    /// `[h→ⱼ; h←ⱼ]` for every sentence position.
    pub hiddens: Vec<Var>,
    /// `[h→_M; h←_1]` of the target encoder.
    pub target_summary: Var,
}

fn concat_directions<T: Scalar>(
    tape: &mut Tape<T>,
    fwd: &[LstmState],
    bwd: &[LstmState],
) -> Result<Vec<Var>> {
    fwd.iter()
        .zip(bwd)
        .map(|(f, b)| tape.concat(&[f.h, b.h]))
        .collect()
}

/// BiLSTM with zero initial states in both directions.
pub fn bilstm_encode<T: Scalar>(
    tape: &mut Tape<T>,
    bound: &Bound,
    p: &BiLstmParams,
    seq: &[Var],
    dropout: &mut Dropout<'_>,
) -> Result<Vec<Var>> {
    if seq.is_empty() {
        return Err(Error::argument("bilstm_encode", "empty sequence"));
    }
    let zero = LstmState::zeros(tape, p.hidden_dim());
    let fwd = run_lstm(tape, bound, &p.forward, seq, zero, false, dropout)?;
    let bwd = run_lstm(tape, bound, &p.backward, seq, zero, true, dropout)?;
    concat_directions(tape, &fwd, &bwd)
}

/// Encodes the sentence conditioned on the target.
///
/// The forward sentence LSTM starts from the forward target LSTM's state
/// after the last target token (hidden and cell); the backward sentence LSTM
/// starts from the backward target LSTM's state after the first token.
pub fn conditional_encode<T: Scalar>(
    tape: &mut Tape<T>,
    bound: &Bound,
    p: &ConditionalParams,
    target: &[Var],
    sentence: &[Var],
    dropout: &mut Dropout<'_>,
) -> Result<ConditionalEncoding> {
    if target.is_empty() {
        return Err(Error::argument("conditional_encode", "empty target"));
    }
    if sentence.is_empty() {
        return Err(Error::argument("conditional_encode", "empty sentence"));
    }
    let zero = LstmState::zeros(tape, p.target.hidden_dim());
    let t_fwd = run_lstm(tape, bound, &p.target.forward, target, zero, false, dropout)?;
    let t_bwd = run_lstm(tape, bound, &p.target.backward, target, zero, true, dropout)?;
    let fwd_init = t_fwd[t_fwd.len() - 1];
    let bwd_init = t_bwd[0];

    let s_fwd = run_lstm(
        tape,
        bound,
        &p.sentence.forward,
        sentence,
        fwd_init,
        false,
        dropout,
    )?;
    let s_bwd = run_lstm(
        tape,
        bound,
        &p.sentence.backward,
        sentence,
        bwd_init,
        true,
        dropout,
    )?;
    let hiddens = concat_directions(tape, &s_fwd, &s_bwd)?;
    let target_summary = tape.concat(&[fwd_init.h, bwd_init.h])?;
    Ok(ConditionalEncoding {
        hiddens,
        target_summary,
    })
}
