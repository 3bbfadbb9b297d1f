use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;

use super::adam::Adam;
use super::early_stop::{Decision, EarlyStopping};
use super::hyper::Hyperparams;
use super::loss::objective;
use crate::data::Example;
use crate::error::{Error, Result};
use crate::eval::evaluate;
use crate::model::{AdversarialLink, Model};
use crate::nn::{Dropout, GradBuffer, ParamStore};
use crate::tensor::{Scalar, Tape};
use crate::Rng;

/// Mean training losses over one epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLosses {
    pub stance: f64,
    pub domain: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub stance_loss: f64,
    pub domain_loss: f64,
    pub dev_macro_f1: f64,
}

impl EpochRecord {
    /// Tab-separated log line without a trailing newline.
    pub fn log_line(&self) -> String {
        format!(
            "{}\t{:.6}\t{:.6}\t{:.6}",
            self.epoch, self.stance_loss, self.domain_loss, self.dev_macro_f1
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub stopped_epoch: usize,
    pub best_dev_macro_f1: f64,
    pub wall_time: Duration,
}

/// Mini-batch optimizer state bound to one model.
///
/// Each example gets its own tape; the batch gradient is the mean of the
/// per-example gradients.
pub struct Trainer<'m, T: Scalar> {
    model: &'m mut Model<T>,
    hp: Hyperparams,
    adam: Adam<T>,
    grads: GradBuffer<T>,
    rng: Rng,
    examples: Vec<Example>,
    order: Vec<usize>,
    steps: usize,
}

impl<'m, T: Scalar> Trainer<'m, T> {
    pub fn new(model: &'m mut Model<T>, train: &[Example], hp: &Hyperparams) -> Result<Self> {
        hp.validate()?;
        if train.is_empty() {
            return Err(Error::Data("training set is empty".into()));
        }
        let spec = *model.spec();
        if spec.variant.is_adversarial() {
            for (i, ex) in train.iter().enumerate() {
                match ex.domain {
                    None => {
                        return Err(Error::Config(format!(
                            "{} needs a source-domain label on every training example (example {i} has none)",
                            spec.variant
                        )))
                    }
                    Some(d) if d >= spec.num_domains => {
                        return Err(Error::Config(format!(
                            "example {i} has domain {d} but the model has {} domain heads",
                            spec.num_domains
                        )))
                    }
                    _ => {}
                }
            }
        }
        let mut rng = Rng::seed_from_u64(hp.seed);
        // Stream 0 initializes parameters; training draws from its own.
        rng.set_stream(1);
        Ok(Trainer {
            adam: Adam::new(model.params(), hp.learning_rate, hp.l2),
            grads: GradBuffer::zeros_like(model.params()),
            model,
            hp: hp.clone(),
            rng,
            examples: train.to_vec(),
            order: (0..train.len()).collect(),
            steps: 0,
        })
    }

    pub fn model(&self) -> &Model<T> {
        self.model
    }

    /// Optimizer steps taken so far.
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// One pass over the shuffled training set. `on_step` sees the
    /// parameters after every optimizer update.
    pub fn run_epoch(
        &mut self,
        on_step: &mut dyn FnMut(usize, &ParamStore<T>),
    ) -> Result<EpochLosses> {
        self.order.shuffle(&mut self.rng);
        let mut stance_sum = 0.0;
        let mut domain_sum = 0.0;
        let batches: Vec<Vec<usize>> = self
            .order
            .chunks(self.hp.batch_size)
            .map(<[usize]>::to_vec)
            .collect();
        for batch in batches {
            self.grads.zero();
            let scale = T::of(1.0 / batch.len() as f64);
            for idx in batch {
                let ex = &self.examples[idx];
                let mut tape = Tape::with_capacity(4096);
                let bound = self.model.params().bind(&mut tape);
                let mut dropout = Dropout::train(self.hp.dropout, &mut self.rng)?;
                let graph = self.model.forward_graph(
                    &mut tape,
                    &bound,
                    ex,
                    &mut dropout,
                    AdversarialLink::Reversed,
                )?;
                let obj = objective(&mut tape, &graph, ex.stance, ex.domain, self.hp.lambda)?;
                stance_sum += tape.scalar(obj.stance).as_f64();
                if let Some(d) = obj.domain {
                    domain_sum += tape.scalar(d).as_f64();
                }
                let g = tape.backward(obj.root)?;
                self.grads.accumulate(&g, &bound, scale);
            }
            if self.hp.clip_norm > 0.0 {
                self.grads.clip_global_norm(T::of(self.hp.clip_norm));
            }
            self.adam.step(self.model.params_mut(), &self.grads)?;
            self.steps += 1;
            on_step(self.steps, self.model.params());
        }
        let n = self.examples.len() as f64;
        Ok(EpochLosses {
            stance: stance_sum / n,
            domain: domain_sum / n,
        })
    }
}

/// Trains with early stopping on dev macro-F1 and leaves the best-epoch
/// parameters in `model`. `on_epoch` is called after every epoch.
pub fn train<T: Scalar>(
    model: &mut Model<T>,
    train: &[Example],
    dev: &[Example],
    hp: &Hyperparams,
    on_epoch: &mut dyn FnMut(&EpochRecord),
) -> Result<TrainReport> {
    if dev.is_empty() {
        return Err(Error::Data("validation set is empty".into()));
    }
    let start = Instant::now();
    let mut best = model.params().clone();
    let mut stopper = EarlyStopping::new(hp.patience);
    let mut epochs = Vec::new();
    let mut trainer = Trainer::new(model, train, hp)?;
    for epoch in 1..=hp.max_epochs {
        let losses = trainer.run_epoch(&mut |_, _| {})?;
        let dev_macro_f1 = evaluate(trainer.model(), dev)?.macro_f1;
        let record = EpochRecord {
            epoch,
            stance_loss: losses.stance,
            domain_loss: losses.domain,
            dev_macro_f1,
        };
        on_epoch(&record);
        epochs.push(record);
        match stopper.observe(epoch, dev_macro_f1) {
            Decision::Improved => best = trainer.model().params().clone(),
            Decision::Continue => {}
            Decision::Stop => break,
        }
    }
    model.params_mut().load_from(&best)?;
    Ok(TrainReport {
        stopped_epoch: epochs.len(),
        best_epoch: stopper.best_epoch().expect("at least one epoch"),
        best_dev_macro_f1: stopper.best_score().expect("at least one epoch"),
        epochs,
        wall_time: start.elapsed(),
    })
}
