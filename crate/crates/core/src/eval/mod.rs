//! Stance metrics and attention dumps.

mod attention;
mod metrics;

pub use attention::{
    attention_records, dump_attention, render_html, render_jsonl, AttentionRecord,
};
pub use metrics::{
    compute_metrics, f1_score, metrics_from_confusion, ratio, ClassScores, ConfusionMatrix,
    MetricsReport,
};

use crate::data::Example;
use crate::error::Result;
use crate::model::Model;
use crate::tensor::Scalar;
use crate::Stance;

/// Evaluation-mode predictions for every example, in order.
pub fn predict_all<T: Scalar>(model: &Model<T>, examples: &[Example]) -> Result<Vec<Stance>> {
    examples
        .iter()
        .map(|ex| Ok(model.predict(ex)?.predicted()))
        .collect()
}

pub fn evaluate<T: Scalar>(model: &Model<T>, examples: &[Example]) -> Result<MetricsReport> {
    let preds = predict_all(model, examples)?;
    let golds: Vec<Stance> = examples.iter().map(|e| e.stance).collect();
    compute_metrics(&preds, &golds)
}
