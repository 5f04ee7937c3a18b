use serde::{Deserialize, Serialize};

use super::confusion::ConfusionMatrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// One-vs-rest counts and scores for a single class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerClass<F> {
    pub label: String,
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
    pub precision: F,
    pub recall: F,
    pub f1: F,
    /// Set when any of the three scores hit a zero denominator and was
    /// defined as 0.
    pub zero_division: bool,
}

impl<F> PerClass<F> {
    pub fn support(&self) -> u64 {
        self.tp + self.fn_
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics<F> {
    pub per_class: Vec<PerClass<F>>,
    /// Trace over total of the multiclass matrix.
    pub accuracy: F,
    pub macro_precision: F,
    pub macro_recall: F,
    pub macro_f1: F,
    pub micro_precision: F,
    pub micro_recall: F,
}

fn ratio<F: Scalar>(num: u64, den: u64) -> (F, bool) {
    if den == 0 {
        (F::zero(), true)
    } else {
        (F::of(num as f64) / F::of(den as f64), false)
    }
}

pub fn class_metrics<F: Scalar>(cm: &ConfusionMatrix) -> Result<ClassMetrics<F>> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::Undefined("confusion matrix is empty".into()));
    }
    let k = cm.k();
    let mut per_class = Vec::with_capacity(k);
    for c in 0..k {
        let tp = cm.counts[c][c];
        let col: u64 = (0..k).map(|r| cm.counts[r][c]).sum();
        let row: u64 = cm.counts[c].iter().sum();
        let fp = col - tp;
        let fn_ = row - tp;
        let tn = total - tp - fp - fn_;
        let (precision, zp) = ratio::<F>(tp, tp + fp);
        let (recall, zr) = ratio::<F>(tp, tp + fn_);
        let sum = precision + recall;
        let (f1, zf) = if sum > F::zero() { (F::two() * precision * recall / sum, false) } else { (F::zero(), true) };
        per_class.push(PerClass {
            label: cm.labels.get(c).cloned().unwrap_or_else(|| c.to_string()),
            tp,
            fp,
            fn_,
            tn,
            precision,
            recall,
            f1,
            zero_division: zp || zr || zf,
        });
    }
    let kf = F::of_usize(k);
    let mean = |f: fn(&PerClass<F>) -> F| per_class.iter().map(f).sum::<F>() / kf;
    let tp_sum: u64 = per_class.iter().map(|p| p.tp).sum();
    let pred_sum: u64 = per_class.iter().map(|p| p.tp + p.fp).sum();
    let true_sum: u64 = per_class.iter().map(|p| p.tp + p.fn_).sum();
    Ok(ClassMetrics {
        accuracy: ratio(cm.trace(), total).0,
        macro_precision: mean(|p| p.precision),
        macro_recall: mean(|p| p.recall),
        macro_f1: mean(|p| p.f1),
        micro_precision: ratio(tp_sum, pred_sum).0,
        micro_recall: ratio(tp_sum, true_sum).0,
        per_class,
    })
}
