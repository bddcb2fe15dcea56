//! Side classifiers and evaluation metrics.

mod classic;
mod lstm;
mod train;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use classic::{DecisionTree, Knn, LinearSvm, Standardizer, SvmConfig, TreeNode};
pub use lstm::{softmax, Forward, LstmLayer, LstmModel, N_CLASSES};
pub use train::{evaluate_loss, train, train_model, EpochRecord, Example, History, Optimizer, TrainConfig};

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("empty {0}")]
    Empty(&'static str),
    #[error("non-finite input value")]
    NonFinite,
    #[error("training diverged at epoch {epoch}")]
    Diverged { epoch: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Tally {
    pub correct: usize,
    pub total: usize,
}

impl Tally {
    pub fn accuracy(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.correct as f64 / self.total as f64
        }
    }
}

/// Classification summary; `confusion[truth][predicted]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub n: usize,
    pub confusion: [[usize; 2]; 2],
    pub per_condition: BTreeMap<String, Tally>,
}

/// Score predictions against labels, grouping by condition name.
pub fn evaluate(predicted: &[usize], truth: &[usize], conditions: &[String]) -> Result<Metrics, ClassifyError> {
    if truth.is_empty() {
        return Err(ClassifyError::Empty("test set"));
    }
    if predicted.len() != truth.len() || conditions.len() != truth.len() {
        return Err(ClassifyError::Shape(format!(
            "{} predictions, {} labels, {} conditions",
            predicted.len(),
            truth.len(),
            conditions.len()
        )));
    }
    let mut confusion = [[0usize; 2]; 2];
    let mut per_condition: BTreeMap<String, Tally> = BTreeMap::new();
    for ((&p, &y), c) in predicted.iter().zip(truth).zip(conditions) {
        if p >= N_CLASSES || y >= N_CLASSES {
            return Err(ClassifyError::Shape(format!("class index {} out of range", p.max(y))));
        }
        confusion[y][p] += 1;
        let t = per_condition.entry(c.clone()).or_default();
        t.total += 1;
        t.correct += usize::from(p == y);
    }
    let correct = confusion[0][0] + confusion[1][1];
    Ok(Metrics {
        accuracy: correct as f64 / truth.len() as f64,
        n: truth.len(),
        confusion,
        per_condition,
    })
}
