//! Named parameter registry shared by every layer.

use std::ops::Index;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::tensor::{Gradients, Scalar, Shape, Tape, Tensor, Var};
use crate::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamId(usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Which side of the minimax a parameter sits on.
///
/// `Stance` parameters (encoders, attention, stance head) minimize the stance
/// loss and receive reversed domain gradients; `Adversarial` parameters are
/// the per-domain classifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamGroup {
    Stance,
    Adversarial,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param<T> {
    pub name: String,
    pub value: Tensor<T>,
    pub group: ParamGroup,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamStore<T> {
    params: Vec<Param<T>>,
}

impl<T: Scalar> ParamStore<T> {
    pub fn new() -> Self {
        ParamStore { params: Vec::new() }
    }

    /// Panics on a duplicate name; names are fixed by the architecture.
    pub fn add(&mut self, name: impl Into<String>, value: Tensor<T>, group: ParamGroup) -> ParamId {
        let name = name.into();
        assert!(
            self.params.iter().all(|p| p.name != name),
            "duplicate parameter name {name}"
        );
        self.params.push(Param { name, value, group });
        ParamId(self.params.len() - 1)
    }

    /// Uniform in `[-r, r]` with `r = sqrt(6 / (fan_in + fan_out))`.
    pub fn add_xavier(
        &mut self,
        name: impl Into<String>,
        rows: usize,
        cols: usize,
        group: ParamGroup,
        rng: &mut Rng,
    ) -> ParamId {
        self.add(name, xavier_uniform(rows, cols, rng), group)
    }

    pub fn add_filled(
        &mut self,
        name: impl Into<String>,
        len: usize,
        fill: f64,
        group: ParamGroup,
    ) -> ParamId {
        self.add(name, Tensor::vector(vec![T::of(fill); len]), group)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn get(&self, id: ParamId) -> &Param<T> {
        &self.params[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Param<T> {
        &mut self.params[id.0]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Param<T>> {
        self.params.iter()
    }

    pub fn iter_mut(&mut self) -> std::slice::IterMut<'_, Param<T>> {
        self.params.iter_mut()
    }

    pub fn find(&self, name: &str) -> Option<&Param<T>> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn scalar_count(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }

    pub fn group_count(&self, group: ParamGroup) -> usize {
        self.params
            .iter()
            .filter(|p| p.group == group)
            .map(|p| p.value.len())
            .sum()
    }

    /// Records every parameter as a differentiable leaf.
    pub fn bind(&self, tape: &mut Tape<T>) -> Bound {
        Bound(
            self.params
                .iter()
                .map(|p| tape.leaf(p.value.clone()))
                .collect(),
        )
    }

    /// Copies values from `other`, which must have identical names and shapes.
    pub fn load_from(&mut self, other: &ParamStore<T>) -> Result<()> {
        if other.len() != self.len() {
            return Err(Error::Checkpoint(format!(
                "parameter count mismatch: {} vs {}",
                self.len(),
                other.len()
            )));
        }
        for (mine, theirs) in self.params.iter_mut().zip(&other.params) {
            if mine.name != theirs.name || mine.value.shape() != theirs.value.shape() {
                return Err(Error::Checkpoint(format!(
                    "parameter mismatch: {} {} vs {} {}",
                    mine.name,
                    mine.value.shape(),
                    theirs.name,
                    theirs.value.shape()
                )));
            }
            mine.value = theirs.value.clone();
            mine.group = theirs.group;
        }
        Ok(())
    }
}

pub(crate) fn xavier_uniform<T: Scalar>(rows: usize, cols: usize, rng: &mut Rng) -> Tensor<T> {
    let r = (6.0 / (rows + cols) as f64).sqrt();
    let data = (0..rows * cols)
        .map(|_| T::of(rng.gen_range(-r..=r)))
        .collect();
    Tensor::new(Shape::Matrix(rows, cols), data)
}

/// Tape handles for every parameter of a store, indexed by [`ParamId`].
#[derive(Debug, Clone)]
pub struct Bound(Vec<Var>);

impl Bound {
    /// Wraps leaves created elsewhere, in store order.
    pub fn from_vars(vars: Vec<Var>) -> Self {
        Bound(vars)
    }

    pub fn vars(&self) -> &[Var] {
        &self.0
    }
}

impl Index<ParamId> for Bound {
    type Output = Var;

    fn index(&self, id: ParamId) -> &Var {
        &self.0[id.0]
    }
}

/// Per-parameter gradient accumulators, aligned with a [`ParamStore`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradBuffer<T> {
    grads: Vec<Vec<T>>,
}

impl<T: Scalar> GradBuffer<T> {
    pub fn zeros_like(store: &ParamStore<T>) -> Self {
        GradBuffer {
            grads: store
                .iter()
                .map(|p| vec![T::zero(); p.value.len()])
                .collect(),
        }
    }

    pub fn zero(&mut self) {
        for g in &mut self.grads {
            g.iter_mut().for_each(|x| *x = T::zero());
        }
    }

    /// Adds `scale · ∂root/∂param` for every bound parameter.
    pub fn accumulate(&mut self, grads: &Gradients<T>, bound: &Bound, scale: T) {
        for (buf, &v) in self.grads.iter_mut().zip(bound.vars()) {
            if let Some(g) = grads.get(v) {
                for (b, &x) in buf.iter_mut().zip(g) {
                    *b = *b + scale * x;
                }
            }
        }
    }

    pub fn get(&self, id: ParamId) -> &[T] {
        &self.grads[id.0]
    }

    pub fn as_slices(&self) -> &[Vec<T>] {
        &self.grads
    }

    pub fn global_norm(&self) -> T {
        self.grads
            .iter()
            .flat_map(|g| g.iter())
            .fold(T::zero(), |acc, &x| acc + x * x)
            .sqrt()
    }

    /// Rescales so the global L2 norm is at most `max_norm`. Returns the
    /// norm before clipping.
    pub fn clip_global_norm(&mut self, max_norm: T) -> T {
        let norm = self.global_norm();
        if norm > max_norm {
            let factor = max_norm / norm;
            for g in &mut self.grads {
                g.iter_mut().for_each(|x| *x = *x * factor);
            }
        }
        norm
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn xavier_bounds() {
        let mut rng = Rng::seed_from_u64(3);
        let t: Tensor<f64> = xavier_uniform(4, 2, &mut rng);
        let r = 1.0f64;
        assert!(t.data().iter().all(|x| x.abs() <= r));
        assert!(t.data().iter().any(|&x| x != 0.0));
    }

    #[test]
    fn clip_scales_to_max_norm() {
        let mut store = ParamStore::<f64>::new();
        store.add("a", Tensor::vector(vec![0.0, 0.0]), ParamGroup::Stance);
        let mut buf = GradBuffer::zeros_like(&store);
        buf.grads[0] = vec![3.0, 4.0];
        assert_eq!(buf.clip_global_norm(1.0), 5.0);
        assert!((buf.global_norm() - 1.0).abs() < 1e-15);
        assert_eq!(buf.clip_global_norm(10.0), 1.0);
    }

    #[test]
    #[should_panic(expected = "duplicate")]
    fn duplicate_names_rejected() {
        let mut store = ParamStore::<f32>::new();
        store.add_filled("x", 1, 0.0, ParamGroup::Stance);
        store.add_filled("x", 1, 0.0, ParamGroup::Stance);
    }
}
