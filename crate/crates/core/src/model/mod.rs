//! The five stance architectures and their checkpoint format.

mod checkpoint;
#[allow(clippy::module_inception)]
mod model;
mod spec;

pub use checkpoint::{Checkpoint, FORMAT_VERSION};
pub use model::{AdversarialLink, AttentionValues, ForwardOutput, Graph, Model};
pub use spec::{ModelSpec, Variant};
