//! Stance detection toward unseen targets with adversarially learned
//! domain-invariant representations.
//!
//! The crate carries its own reverse-mode autodiff engine ([`tensor`]), the
//! LSTM/attention layers built on it ([`nn`]), the five model variants
//! ([`model`]), data ingestion ([`data`]), training ([`train`]), metrics and
//! attention dumps ([`eval`]), and the gradient-check suite
//! ([`diagnostics`]).

pub mod data;
pub mod diagnostics;
pub mod error;
pub mod eval;
pub mod model;
pub mod nn;
mod stance;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
pub use model::{Model, ModelSpec, Variant};
pub use stance::Stance;
pub use tensor::{Precision, Scalar, Shape, Tensor};

/// Seeded generator used for initialization, shuffling and dropout.
pub type Rng = rand_chacha::ChaCha8Rng;
