use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::Stance;

/// Rows are gold labels, columns predictions, both in FAVOR, AGAINST, NONE
/// order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionMatrix {
    counts: [[usize; Stance::COUNT]; Stance::COUNT],
}

impl ConfusionMatrix {
    pub fn from_labels(preds: &[Stance], golds: &[Stance]) -> Result<Self> {
        if preds.len() != golds.len() {
            return Err(Error::argument(
                "compute_metrics",
                format!(
                    "{} predictions for {} gold labels",
                    preds.len(),
                    golds.len()
                ),
            ));
        }
        let mut m = ConfusionMatrix::default();
        for (&p, &g) in preds.iter().zip(golds) {
            m.add(g, p);
        }
        Ok(m)
    }

    pub fn add(&mut self, gold: Stance, predicted: Stance) {
        self.counts[gold.index()][predicted.index()] += 1;
    }

    pub fn count(&self, gold: Stance, predicted: Stance) -> usize {
        self.counts[gold.index()][predicted.index()]
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn true_positives(&self, class: Stance) -> usize {
        self.count(class, class)
    }

    pub fn false_positives(&self, class: Stance) -> usize {
        Stance::ALL
            .iter()
            .filter(|&&g| g != class)
            .map(|&g| self.count(g, class))
            .sum()
    }

    pub fn false_negatives(&self, class: Stance) -> usize {
        Stance::ALL
            .iter()
            .filter(|&&p| p != class)
            .map(|&p| self.count(class, p))
            .sum()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// `a / b`, with `0 / 0` taken as 0.
pub fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Harmonic mean of precision and recall, 0 when both are 0.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

impl ClassScores {
    fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        ClassScores {
            precision,
            recall,
            f1: f1_score(precision, recall),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    /// Indexed by [`Stance::index`].
    pub per_class: [ClassScores; Stance::COUNT],
    /// Mean of the FAVOR and AGAINST F1 scores.
    pub macro_f1: f64,
    pub accuracy: f64,
    pub confusion: ConfusionMatrix,
}

impl MetricsReport {
    pub fn class(&self, s: Stance) -> &ClassScores {
        &self.per_class[s.index()]
    }

    pub fn examples(&self) -> usize {
        self.confusion.total()
    }

    /// One block of `key = value` lines headed by `[split]`.
    pub fn render(&self, split: &str) -> String {
        let mut out = format!("[{split}]\n");
        for s in Stance::ALL {
            let c = self.class(s);
            let _ = writeln!(out, "{s}.P = {:.6}", c.precision);
            let _ = writeln!(out, "{s}.R = {:.6}", c.recall);
            let _ = writeln!(out, "{s}.F1 = {:.6}", c.f1);
        }
        let _ = writeln!(out, "Macro = {:.6}", self.macro_f1);
        let _ = writeln!(out, "Accuracy = {:.6}", self.accuracy);
        let _ = writeln!(out, "N = {}", self.examples());
        out
    }
}

pub fn compute_metrics(preds: &[Stance], golds: &[Stance]) -> Result<MetricsReport> {
    let confusion = ConfusionMatrix::from_labels(preds, golds)?;
    if confusion.total() == 0 {
        return Err(Error::argument("compute_metrics", "no examples"));
    }
    Ok(metrics_from_confusion(confusion))
}

pub fn metrics_from_confusion(confusion: ConfusionMatrix) -> MetricsReport {
    let per_class = Stance::ALL.map(|s| {
        ClassScores::from_counts(
            confusion.true_positives(s),
            confusion.false_positives(s),
            confusion.false_negatives(s),
        )
    });
    let correct: usize = Stance::ALL
        .iter()
        .map(|&s| confusion.true_positives(s))
        .sum();
    MetricsReport {
        macro_f1: (per_class[Stance::Favor.index()].f1 + per_class[Stance::Against.index()].f1)
            / 2.0,
        accuracy: ratio(correct, confusion.total()),
        per_class,
        confusion,
    }
}
