use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// ROC points from a descending threshold sweep, starting at (0, 0) and
/// ending at (1, 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve<F> {
    /// `(false positive rate, true positive rate)` pairs.
    pub points: Vec<(F, F)>,
    pub auc: F,
}

/// Tied scores form a single sweep step, so the trapezoidal area counts a
/// tied positive/negative pair as one half.
pub fn roc_curve<F: Scalar>(y_true: &[bool], scores: &[F]) -> Result<RocCurve<F>> {
    if y_true.len() != scores.len() {
        return Err(Error::Argument(format!("{} labels but {} scores", y_true.len(), scores.len())));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Argument("NaN score".into()));
    }
    let positives = y_true.iter().filter(|&&y| y).count() as u64;
    let negatives = y_true.len() as u64 - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::Undefined("ROC needs both classes present".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).expect("no NaN"));

    let (p, n) = (F::of(positives as f64), F::of(negatives as f64));
    let mut points = vec![(F::zero(), F::zero())];
    let (mut tp, mut fp) = (0u64, 0u64);
    // twice the area in count units: sum of dFP * (TP_prev + TP_next)
    let mut area2: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        let (prev_tp, prev_fp) = (tp, fp);
        while i < order.len() && scores[order[i]] == s {
            if y_true[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        area2 += u128::from(fp - prev_fp) * u128::from(prev_tp + tp);
        points.push((F::of(fp as f64) / n, F::of(tp as f64) / p));
    }
    let auc = F::of(area2 as f64) / (F::two() * p * n);
    Ok(RocCurve { points, auc })
}

/// One-vs-rest curve per class from column `c` of `scores`. Classes absent
/// from (or covering all of) `y_true` yield `None`.
pub fn multiclass_roc<F: Scalar>(y_true: &[usize], scores: &[Vec<F>], k: usize) -> Result<Vec<Option<RocCurve<F>>>> {
    if y_true.len() != scores.len() {
        return Err(Error::Argument(format!("{} labels but {} score rows", y_true.len(), scores.len())));
    }
    if let Some(bad) = scores.iter().find(|r| r.len() != k) {
        return Err(Error::Argument(format!("score row has {} columns, expected {k}", bad.len())));
    }
    (0..k)
        .map(|c| {
            let labels: Vec<bool> = y_true.iter().map(|&y| y == c).collect();
            let col: Vec<F> = scores.iter().map(|r| r[c]).collect();
            match roc_curve(&labels, &col) {
                Ok(curve) => Ok(Some(curve)),
                Err(Error::Undefined(_)) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_ranking() {
        let r = roc_curve(&[true, true, false, false], &[0.9_f64, 0.8, 0.3, 0.1]).unwrap();
        assert_eq!(r.auc, 1.0);
        assert_eq!(r.points.first(), Some(&(0.0, 0.0)));
        assert_eq!(r.points.last(), Some(&(1.0, 1.0)));
    }

    #[test]
    fn all_equal_scores() {
        let r = roc_curve(&[true, false, true, false], &[0.5_f64; 4]).unwrap();
        assert_eq!(r.auc, 0.5);
        assert_eq!(r.points, vec![(0.0, 0.0), (1.0, 1.0)]);
    }

    #[test]
    fn three_of_four_pairs_concordant() {
        let r = roc_curve(&[true, false, true, false], &[0.9_f64, 0.8, 0.7, 0.1]).unwrap();
        assert!((r.auc - 0.75).abs() < 1e-15);
    }

    #[test]
    fn single_class_is_undefined() {
        assert!(matches!(roc_curve(&[true, true], &[0.1_f64, 0.2]), Err(Error::Undefined(_))));
    }

    #[test]
    fn multiclass_marks_absent_class() {
        let scores = vec![vec![0.9_f64, 0.1, 0.0], vec![0.2, 0.8, 0.0], vec![0.6, 0.4, 0.0]];
        let curves = multiclass_roc(&[0, 1, 0], &scores, 3).unwrap();
        assert_eq!(curves[0].as_ref().unwrap().auc, 1.0);
        assert_eq!(curves[1].as_ref().unwrap().auc, 1.0);
        assert!(curves[2].is_none());
    }

    #[test]
    fn two_class_curves_are_symmetric() {
        let probs = [0.1_f64, 0.4, 0.35, 0.8, 0.65, 0.2, 0.9, 0.55];
        let y = [0, 0, 1, 1, 0, 0, 1, 1];
        let scores: Vec<Vec<f64>> = probs.iter().map(|&p| vec![1.0 - p, p]).collect();
        let curves = multiclass_roc(&y, &scores, 2).unwrap();
        let (a, b) = (curves[0].as_ref().unwrap().auc, curves[1].as_ref().unwrap().auc);
        assert!((a - b).abs() < 1e-12);
    }

    proptest::proptest! {
        #[test]
        fn invariant_under_monotone_transform(
            data in proptest::collection::vec((proptest::bool::ANY, 0u32..20), 2..60)
        ) {
            let y: Vec<bool> = data.iter().map(|d| d.0).collect();
            proptest::prop_assume!(y.iter().any(|&v| v) && y.iter().any(|&v| !v));
            let s: Vec<f64> = data.iter().map(|d| d.1 as f64).collect();
            let t: Vec<f64> = s.iter().map(|v| (v * 0.3).exp() + 2.0).collect();
            let a = roc_curve(&y, &s).unwrap().auc;
            let b = roc_curve(&y, &t).unwrap().auc;
            proptest::prop_assert_eq!(a, b);
            let pts = roc_curve(&y, &s).unwrap().points;
            proptest::prop_assert!(pts.windows(2).all(|w| w[0].0 <= w[1].0 && w[0].1 <= w[1].1));
        }
    }
}
