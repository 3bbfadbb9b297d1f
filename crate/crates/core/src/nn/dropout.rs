use rand::Rng as _;

use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tape, Var};
use crate::Rng;

/// Inverted dropout. Evaluation mode is the identity and never touches the
/// generator, so inference is deterministic.
#[derive(Debug)]
pub struct Dropout<'r> {
    rate: f64,
    rng: Option<&'r mut Rng>,
}

impl<'r> Dropout<'r> {
    pub fn eval() -> Self {
        Dropout {
            rate: 0.0,
            rng: None,
        }
    }

    pub fn train(rate: f64, rng: &'r mut Rng) -> Result<Self> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::argument(
                "dropout",
                format!("rate must be in [0, 1), got {rate}"),
            ));
        }
        Ok(Dropout {
            rate,
            rng: Some(rng),
        })
    }

    pub fn is_training(&self) -> bool {
        self.rng.is_some()
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Zeros each coordinate with probability `rate` and scales survivors by
    /// `1 / (1 - rate)`.
    pub fn apply<T: Scalar>(&mut self, tape: &mut Tape<T>, x: Var) -> Result<Var> {
        let Some(rng) = self.rng.as_deref_mut() else {
            return Ok(x);
        };
        if self.rate == 0.0 {
            return Ok(x);
        }
        let keep = T::of(1.0 / (1.0 - self.rate));
        let factors = (0..tape.value(x).len())
            .map(|_| {
                if rng.gen::<f64>() < self.rate {
                    T::zero()
                } else {
                    keep
                }
            })
            .collect();
        tape.scale_by(x, factors)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Tensor;
    use rand::SeedableRng;

    #[test]
    fn rate_zero_and_eval_are_identity() {
        let mut rng = Rng::seed_from_u64(1);
        let mut t = Tape::<f64>::new();
        let x = t.leaf(Tensor::vector(vec![1.0, -2.0, 3.0]));
        let mut d = Dropout::train(0.0, &mut rng).unwrap();
        let y = d.apply(&mut t, x).unwrap();
        assert_eq!(t.value(y), t.value(x));
        let mut e = Dropout::eval();
        let y = e.apply(&mut t, x).unwrap();
        assert_eq!(t.value(y), t.value(x));
    }

    #[test]
    fn rejects_rate_one() {
        let mut rng = Rng::seed_from_u64(1);
        assert!(Dropout::train(1.0, &mut rng).is_err());
        assert!(Dropout::train(-0.1, &mut rng).is_err());
    }

    #[test]
    fn mean_is_preserved_in_expectation() {
        // Monte-Carlo oracle: average of 10000 masked copies of x
        // approaches x.
        let mut rng = Rng::seed_from_u64(7);
        let x = [1.0, -2.0, 0.5, 4.0];
        let trials = 10_000;
        let mut acc = [0.0; 4];
        let mut d = Dropout::train(0.5, &mut rng).unwrap();
        for _ in 0..trials {
            let mut t = Tape::<f64>::new();
            let v = t.leaf(Tensor::vector(x.to_vec()));
            let y = d.apply(&mut t, v).unwrap();
            for (a, &b) in acc.iter_mut().zip(t.value(y)) {
                *a += b;
            }
        }
        for (a, &xi) in acc.iter().zip(&x) {
            let mean = a / trials as f64;
            assert!((mean - xi).abs() <= 0.02 * xi.abs(), "{mean} vs {xi}");
        }
    }
}
