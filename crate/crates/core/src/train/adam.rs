use crate::error::{Error, Result};
use crate::nn::{GradBuffer, ParamStore};
use crate::tensor::Scalar;

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

/// Adam with bias correction. L2 regularization enters as `l2 · param`
/// added to the gradient before the moment updates.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam<T> {
    pub learning_rate: f64,
    pub l2: f64,
    step: u64,
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
}

impl<T: Scalar> Adam<T> {
    pub fn new(store: &ParamStore<T>, learning_rate: f64, l2: f64) -> Self {
        let zeros = || {
            store
                .iter()
                .map(|p| vec![T::zero(); p.value.len()])
                .collect()
        };
        Adam {
            learning_rate,
            l2,
            step: 0,
            m: zeros(),
            v: zeros(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn step(&mut self, store: &mut ParamStore<T>, grads: &GradBuffer<T>) -> Result<()> {
        let slices = grads.as_slices();
        if slices.len() != self.m.len() || store.len() != self.m.len() {
            return Err(Error::argument(
                "adam_step",
                "gradient buffer does not match parameters",
            ));
        }
        self.step += 1;
        let t = self.step as i32;
        let (b1, b2) = (T::of(BETA1), T::of(BETA2));
        let one = T::one();
        let c1 = T::of(1.0 - BETA1.powi(t));
        let c2 = T::of(1.0 - BETA2.powi(t));
        let lr = T::of(self.learning_rate);
        let l2 = T::of(self.l2);
        let eps = T::of(EPSILON);
        for (((param, g), m), v) in store
            .iter_mut()
            .zip(slices)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            let values = param.value.data_mut();
            if values.len() != g.len() {
                return Err(Error::argument(
                    "adam_step",
                    format!("shape mismatch for {}", param.name),
                ));
            }
            for i in 0..values.len() {
                let grad = g[i] + l2 * values[i];
                m[i] = b1 * m[i] + (one - b1) * grad;
                v[i] = b2 * v[i] + (one - b2) * grad * grad;
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                values[i] = values[i] - lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::ParamGroup;
    use crate::tensor::{Tape, Tensor};

    fn scalar_store(x: f64) -> ParamStore<f64> {
        let mut s = ParamStore::new();
        s.add("x", Tensor::vector(vec![x]), ParamGroup::Stance);
        s
    }

    fn grads_of(store: &ParamStore<f64>, g: f64) -> GradBuffer<f64> {
        // d(g·x)/dx = g
        let mut t = Tape::new();
        let b = store.bind(&mut t);
        let x = b.vars()[0];
        let y = t.scale(x, g);
        let root = t.sum(y);
        let mut buf = GradBuffer::zeros_like(store);
        buf.accumulate(&t.backward(root).unwrap(), &b, 1.0);
        buf
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        // m̂ = g, v̂ = g², Δ = −lr·g/(|g| + ε)
        let mut s = scalar_store(1.0);
        let mut adam = Adam::new(&s, 0.003, 0.0);
        let g = grads_of(&s, 2.0);
        adam.step(&mut s, &g).unwrap();
        let delta = s.iter().next().unwrap().value.data()[0] - 1.0;
        assert!((delta + 0.003 * 2.0 / (2.0 + 1e-8)).abs() < 1e-15);
    }

    #[test]
    fn zero_gradient_without_l2_is_a_no_op() {
        let mut s = scalar_store(0.7);
        let mut adam = Adam::new(&s, 0.003, 0.0);
        for _ in 0..3 {
            let g = grads_of(&s, 0.0);
            adam.step(&mut s, &g).unwrap();
        }
        assert_eq!(s.iter().next().unwrap().value.data()[0], 0.7);
    }

    #[test]
    fn l2_pulls_towards_zero() {
        let mut s = scalar_store(0.7);
        let mut adam = Adam::new(&s, 0.003, 0.01);
        let g = grads_of(&s, 0.0);
        adam.step(&mut s, &g).unwrap();
        assert!(s.iter().next().unwrap().value.data()[0] < 0.7);
    }

    #[test]
    fn identical_runs_identical_trajectories() {
        let run = || {
            let mut s = scalar_store(0.3);
            let mut adam = Adam::new(&s, 0.01, 0.01);
            (0..5)
                .map(|k| {
                    let g = grads_of(&s, k as f64 - 2.0);
                    adam.step(&mut s, &g).unwrap();
                    s.iter().next().unwrap().value.data()[0]
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn rejects_foreign_buffer() {
        let mut s = scalar_store(0.3);
        let mut adam = Adam::new(&s, 0.01, 0.0);
        let other = ParamStore::<f64>::new();
        assert!(adam.step(&mut s, &GradBuffer::zeros_like(&other)).is_err());
    }
}
