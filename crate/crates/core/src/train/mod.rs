//! Losses, Adam, early stopping and the training loop.

mod adam;
mod early_stop;
mod hyper;
mod loss;
mod trainer;

pub use adam::{Adam, BETA1, BETA2, EPSILON};
pub use early_stop::{Decision, EarlyStopping};
pub use hyper::Hyperparams;
pub use loss::{
    domain_loss, domain_loss_graph, objective, stance_loss, stance_loss_graph, total_loss,
    Objective, BELONGS, PROB_FLOOR,
};
pub use trainer::{train, EpochLosses, EpochRecord, TrainReport, Trainer};
