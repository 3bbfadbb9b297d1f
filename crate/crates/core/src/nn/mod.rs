//! Neural building blocks on top of the tape: LSTMs, bidirectional and
//! conditional encoders, additive attention, max-pooling, dropout and
//! gradient reversal.

mod attention;
mod dropout;
mod encoder;
mod lstm;
mod params;

pub use attention::{additive_attention, Attention, AttentionParams};
pub use dropout::Dropout;
pub use encoder::{
    bilstm_encode, conditional_encode, BiLstmParams, ConditionalEncoding, ConditionalParams,
};
pub use lstm::{lstm_step, run_lstm, LstmParams, LstmState};
pub use params::{Bound, GradBuffer, Param, ParamGroup, ParamId, ParamStore};

use crate::error::Result;
use crate::tensor::{Scalar, Tape, Var};

/// Coordinatewise max over unmasked positions; gradient flows to the first
/// maximizing position of each coordinate.
pub fn max_pool_encode<T: Scalar>(
    tape: &mut Tape<T>,
    hiddens: &[Var],
    mask: Option<&[bool]>,
) -> Result<Var> {
    tape.max_pool(hiddens, mask)
}

/// Identity forward, exact gradient negation backward.
pub fn grl<T: Scalar>(tape: &mut Tape<T>, x: Var) -> Var {
    tape.grl(x)
}
