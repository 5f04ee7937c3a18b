use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Counts indexed `[true class][predicted class]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<u64>>,
    pub labels: Vec<String>,
}

impl ConfusionMatrix {
    pub fn k(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.k()).map(|i| self.counts[i][i]).sum()
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.k() {
            return Err(Error::Argument(format!("{} labels for a {}-class matrix", labels.len(), self.k())));
        }
        self.labels = labels;
        Ok(self)
    }
}

pub fn confusion_matrix(y_true: &[usize], y_pred: &[usize], k: usize) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return Err(Error::Argument(format!("{} true labels but {} predictions", y_true.len(), y_pred.len())));
    }
    let mut counts = vec![vec![0u64; k]; k];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        if t >= k || p >= k {
            return Err(Error::Argument(format!("label {} out of range for {k} classes", t.max(p))));
        }
        counts[t][p] += 1;
    }
    if y_true.is_empty() {
        warn!("confusion matrix built from zero rows");
    }
    Ok(ConfusionMatrix { counts, labels: (0..k).map(|c| c.to_string()).collect() })
}
