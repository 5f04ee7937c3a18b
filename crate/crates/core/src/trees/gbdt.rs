//! Gradient-boosted trees with Newton leaf values.
//!
//! Every round fits one least-squares regression tree per output to the
//! pseudo-residuals `r = -dL/df`, then replaces each leaf with the one-step
//! Newton value `lr * sum(r) / (sum(h) + l2_leaf)` computed over all training
//! rows that reach it.

use log::debug;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cart::{grow_presorted, midpoint, presort, restrict_presorted, Criterion, SquaredError, Tree, TreeParams};
use super::derive_seed;
use super::goss::goss_sample;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::{argmax, softmax, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    Squared,
    MulticlassLogloss,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Plain,
    Goss,
    /// Symmetric trees: one shared test per level.
    Oblivious,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbdtConfig<F> {
    /// Zero rounds leaves only the initial score.
    pub rounds: usize,
    pub learning_rate: F,
    pub max_depth: usize,
    /// Ignored by oblivious trees, whose leaves may be empty.
    pub min_samples_leaf: usize,
    pub l2_leaf: F,
    pub loss: Loss,
    pub variant: Variant,
    /// Top-gradient fraction kept by GOSS.
    pub a: F,
    /// Fraction of the remainder sampled by GOSS.
    pub b: F,
    pub seed: u64,
}

impl<F: Scalar> Default for GbdtConfig<F> {
    fn default() -> Self {
        Self {
            rounds: 100,
            learning_rate: F::of(0.1),
            max_depth: 4,
            min_samples_leaf: 1,
            l2_leaf: F::one(),
            loss: Loss::MulticlassLogloss,
            variant: Variant::Plain,
            a: F::of(0.2),
            b: F::of(0.1),
            seed: 42,
        }
    }
}

/// Depth-`k` symmetric tree; the leaf index has bit `l` set when the row
/// goes right at level `l`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObliviousTree<F> {
    pub features: Vec<usize>,
    pub thresholds: Vec<F>,
    pub leaves: Vec<F>,
}

impl<F: Scalar> ObliviousTree<F> {
    pub fn leaf_index(&self, row: &[F]) -> usize {
        self.features
            .iter()
            .zip(&self.thresholds)
            .enumerate()
            .fold(0, |idx, (level, (&f, &t))| idx | (usize::from(row[f] > t) << level))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum BoostTree<F> {
    Cart { tree: Tree<F> },
    Oblivious { tree: ObliviousTree<F> },
}

impl<F: Scalar> BoostTree<F> {
    /// Unchecked row length.
    fn value(&self, row: &[F]) -> F {
        match self {
            BoostTree::Cart { tree } => match &tree.nodes[tree.leaf_index(row)] {
                super::Node::Leaf { values } => values[0],
                super::Node::Split { .. } => unreachable!(),
            },
            BoostTree::Oblivious { tree } => tree.leaves[tree.leaf_index(row)],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtModel<F> {
    pub variant: Variant,
    pub loss: Loss,
    pub learning_rate: F,
    /// Initial score per output.
    pub f0: Vec<F>,
    /// `rounds[m][c]` is the tree for output `c` in round `m`.
    pub rounds: Vec<Vec<BoostTree<F>>>,
    pub n_features: usize,
    /// Mean training loss before boosting and after each round.
    pub loss_history: Vec<F>,
}

/// `y - f`, the negative gradient of `(y - f)^2 / 2`.
pub fn squared_residual<F: Scalar>(y: F, f: F) -> F {
    y - f
}

/// `-log softmax(scores)[label]`, computed stably.
pub fn multiclass_logloss<F: Scalar>(scores: &[F], label: usize) -> F {
    let m = scores.iter().copied().fold(F::neg_infinity(), F::max);
    let lse = m + scores.iter().map(|&s| (s - m).exp()).sum::<F>().ln();
    lse - scores[label]
}

/// `onehot(label) - softmax(scores)`, the negative gradient of the logloss.
pub fn multiclass_residuals<F: Scalar>(scores: &[F], label: usize) -> Vec<F> {
    let mut r: Vec<F> = softmax(scores).into_iter().map(|p| -p).collect();
    r[label] = r[label] + F::one();
    r
}

enum Targets<'a, F> {
    Real(&'a [F]),
    Labels(&'a [usize]),
}

impl<F: Scalar> GbdtModel<F> {
    /// Regression on real targets with squared loss.
    pub fn fit_regression(x: &Matrix<F>, y: &[F], cfg: &GbdtConfig<F>) -> Result<Self> {
        if cfg.loss != Loss::Squared {
            return Err(Error::Argument("regression requires the squared loss".into()));
        }
        if y.len() != x.rows() {
            return Err(Error::Argument(format!("{} rows but {} targets", x.rows(), y.len())));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Argument("regression targets must be finite".into()));
        }
        fit(x, Targets::Real(y), 1, cfg)
    }

    /// Multiclass classification with the softmax logloss.
    pub fn fit_classifier(x: &Matrix<F>, labels: &[usize], n_classes: usize, cfg: &GbdtConfig<F>) -> Result<Self> {
        if cfg.loss != Loss::MulticlassLogloss {
            return Err(Error::Argument("classification requires the multiclass_logloss loss".into()));
        }
        if labels.len() != x.rows() {
            return Err(Error::Argument(format!("{} rows but {} labels", x.rows(), labels.len())));
        }
        if let Some(&bad) = labels.iter().find(|&&c| c >= n_classes) {
            return Err(Error::Argument(format!("label {bad} out of range")));
        }
        fit(x, Targets::Labels(labels), n_classes, cfg)
    }

    pub fn n_outputs(&self) -> usize {
        self.f0.len()
    }

    /// Accumulated additive scores per output.
    pub fn raw_scores(&self, row: &[F]) -> Result<Vec<F>> {
        if row.len() != self.n_features {
            return Err(Error::Argument(format!("model expects {} features, row has {}", self.n_features, row.len())));
        }
        let mut s = self.f0.clone();
        for round in &self.rounds {
            for (sc, tree) in s.iter_mut().zip(round) {
                *sc = *sc + tree.value(row);
            }
        }
        Ok(s)
    }

    pub fn predict_value(&self, row: &[F]) -> Result<F> {
        Ok(self.raw_scores(row)?[0])
    }

    /// Softmax of the scores (logloss models only).
    pub fn predict_proba(&self, row: &[F]) -> Result<Vec<F>> {
        if self.loss != Loss::MulticlassLogloss {
            return Err(Error::Argument("probabilities need a multiclass_logloss model".into()));
        }
        Ok(softmax(&self.raw_scores(row)?))
    }

    pub fn predict(&self, row: &[F]) -> Result<usize> {
        Ok(argmax(&self.raw_scores(row)?))
    }
}

fn validate<F: Scalar>(x: &Matrix<F>, cfg: &GbdtConfig<F>) -> Result<()> {
    if x.rows() == 0 {
        return Err(Error::Argument("cannot boost on zero rows".into()));
    }
    if !(cfg.learning_rate > F::zero() && cfg.learning_rate <= F::one()) {
        return Err(Error::Argument(format!("learning rate must lie in (0, 1], got {}", cfg.learning_rate)));
    }
    if !(cfg.l2_leaf >= F::zero()) {
        return Err(Error::Argument("l2_leaf must be non-negative".into()));
    }
    if cfg.variant == Variant::Goss {
        // surface bad fractions before any work
        goss_sample(&[F::zero()], cfg.a, cfg.b, 0)?;
    }
    Ok(())
}

fn mean_loss<F: Scalar>(scores: &[Vec<F>], targets: &Targets<'_, F>) -> F {
    let n = F::of_usize(scores.len());
    let total: F = match targets {
        Targets::Real(y) => scores.iter().zip(y.iter()).map(|(s, &y)| F::half() * (y - s[0]) * (y - s[0])).sum(),
        Targets::Labels(l) => scores.iter().zip(l.iter()).map(|(s, &c)| multiclass_logloss(s, c)).sum(),
    };
    total / n
}

fn fit<F: Scalar>(x: &Matrix<F>, targets: Targets<'_, F>, k: usize, cfg: &GbdtConfig<F>) -> Result<GbdtModel<F>> {
    validate(x, cfg)?;
    let n = x.rows();
    let f0: Vec<F> = match &targets {
        Targets::Real(y) => vec![y.iter().copied().sum::<F>() / F::of_usize(n)],
        Targets::Labels(l) => {
            let mut counts = vec![0usize; k];
            for &c in l.iter() {
                counts[c] += 1;
            }
            counts.iter().map(|&c| F::of((c as f64 / n as f64).max(1e-15).ln())).collect()
        }
    };
    let mut scores: Vec<Vec<F>> = vec![f0.clone(); n];
    let mut history = vec![mean_loss(&scores, &targets)];
    let full_order = if x.cols() > 0 { presort(x, &(0..n).collect::<Vec<_>>()) } else { Vec::new() };
    let mut rounds = Vec::with_capacity(cfg.rounds);

    for m in 0..cfg.rounds {
        // pseudo-residuals and hessians, column-major per output
        let mut grad = vec![vec![F::zero(); n]; k];
        let mut hess = vec![vec![F::zero(); n]; k];
        for i in 0..n {
            match &targets {
                Targets::Real(y) => {
                    grad[0][i] = squared_residual(y[i], scores[i][0]);
                    hess[0][i] = F::one();
                }
                Targets::Labels(l) => {
                    let r = multiclass_residuals(&scores[i], l[i]);
                    for c in 0..k {
                        let p = if c == l[i] { F::one() - r[c] } else { -r[c] };
                        grad[c][i] = r[c];
                        hess[c][i] = p * (F::one() - p);
                    }
                }
            }
        }
        if let Some(bad) = grad.iter().flatten().find(|g| !g.is_finite()) {
            return Err(Error::Divergence { epoch: m + 1, detail: format!("non-finite pseudo-residual {bad}") });
        }

        let (weights, keep) = match cfg.variant {
            Variant::Goss => {
                let magnitude: Vec<F> = (0..n).map(|i| grad.iter().map(|g| g[i].abs()).sum()).collect();
                let sample = goss_sample(&magnitude, cfg.a, cfg.b, derive_seed(cfg.seed, m as u64))?;
                let w = sample.row_weights(n);
                let keep: Vec<bool> = w.iter().map(|&v| v > F::zero()).collect();
                (Some(w), keep)
            }
            _ => (None, vec![true; n]),
        };
        let sorted =
            if cfg.variant == Variant::Goss { restrict_presorted(&full_order, &keep) } else { full_order.clone() };

        let trees: Vec<BoostTree<F>> = (0..k)
            .into_par_iter()
            .map(|c| {
                let crit = SquaredError { y: &grad[c], w: weights.as_deref() };
                let mut tree = if x.cols() == 0 {
                    BoostTree::Cart { tree: Tree::constant(vec![F::zero()], 0) }
                } else if cfg.variant == Variant::Oblivious {
                    BoostTree::Oblivious { tree: grow_oblivious(x, &sorted, &crit, cfg.max_depth) }
                } else {
                    let params = TreeParams {
                        max_depth: Some(cfg.max_depth),
                        min_samples_leaf: cfg.min_samples_leaf,
                        mtry: None,
                        seed: cfg.seed,
                    };
                    BoostTree::Cart { tree: grow_presorted(x, sorted.clone(), &crit, params) }
                };
                newton_leaves(&mut tree, x, &grad[c], &hess[c], cfg.learning_rate, cfg.l2_leaf);
                tree
            })
            .collect();

        for (i, s) in scores.iter_mut().enumerate() {
            let row = x.row(i);
            for (sc, tree) in s.iter_mut().zip(&trees) {
                *sc = *sc + tree.value(row);
            }
        }
        let loss = mean_loss(&scores, &targets);
        if !loss.is_finite() {
            return Err(Error::Divergence { epoch: m + 1, detail: format!("training loss became {loss}") });
        }
        history.push(loss);
        rounds.push(trees);
    }
    debug!(
        "boosted {} rounds ({:?}), training loss {} -> {}",
        cfg.rounds,
        cfg.variant,
        history[0],
        history[history.len() - 1]
    );
    Ok(GbdtModel {
        variant: cfg.variant,
        loss: cfg.loss,
        learning_rate: cfg.learning_rate,
        f0,
        rounds,
        n_features: x.cols(),
        loss_history: history,
    })
}

/// Overwrites every leaf with `lr * G / (H + l2)` summed over all rows of `x`.
fn newton_leaves<F: Scalar>(tree: &mut BoostTree<F>, x: &Matrix<F>, g: &[F], h: &[F], lr: F, l2: F) {
    let n_leaves = match tree {
        BoostTree::Cart { tree } => tree.nodes.len(),
        BoostTree::Oblivious { tree } => tree.leaves.len(),
    };
    let mut gs = vec![F::zero(); n_leaves];
    let mut hs = vec![F::zero(); n_leaves];
    for i in 0..x.rows() {
        let leaf = match tree {
            BoostTree::Cart { tree } => tree.leaf_index(x.row(i)),
            BoostTree::Oblivious { tree } => tree.leaf_index(x.row(i)),
        };
        gs[leaf] = gs[leaf] + g[i];
        hs[leaf] = hs[leaf] + h[i];
    }
    let value = |leaf: usize| {
        let denom = hs[leaf] + l2;
        if denom > F::zero() {
            lr * gs[leaf] / denom
        } else {
            F::zero()
        }
    };
    match tree {
        BoostTree::Cart { tree } => {
            for leaf in 0..n_leaves {
                tree.set_leaf(leaf, vec![value(leaf)]);
            }
        }
        BoostTree::Oblivious { tree } => {
            for (leaf, v) in tree.leaves.iter_mut().enumerate() {
                *v = value(leaf);
            }
        }
    }
}

/// Chooses one (feature, threshold) per level maximizing the gain summed
/// over all current leaves. Stops early when no test has positive gain.
fn grow_oblivious<F: Scalar>(
    x: &Matrix<F>,
    sorted: &[Vec<usize>],
    crit: &SquaredError<'_, F>,
    max_depth: usize,
) -> ObliviousTree<F> {
    let mut leaf_of = vec![0usize; x.rows()];
    let mut features = Vec::new();
    let mut thresholds = Vec::new();
    for level in 0..max_depth {
        let n_leaves = 1usize << level;
        let mut parents = vec![crit.empty(); n_leaves];
        for &row in &sorted[0] {
            crit.push(&mut parents[leaf_of[row]], row);
        }
        let best = (0..x.cols())
            .into_par_iter()
            .map(|f| {
                let order = &sorted[f];
                let mut left = vec![crit.empty(); n_leaves];
                let mut gains = vec![F::zero(); n_leaves];
                let mut total = F::zero();
                let mut best: Option<(F, F)> = None;
                for i in 0..order.len().saturating_sub(1) {
                    let row = order[i];
                    let l = leaf_of[row];
                    crit.push(&mut left[l], row);
                    let g = crit.gain(&parents[l], &left[l]);
                    total = total + g - gains[l];
                    gains[l] = g;
                    let (lo, hi) = (x.get(row, f), x.get(order[i + 1], f));
                    if lo < hi && best.is_none_or(|(bg, _)| total > bg) {
                        best = Some((total, midpoint(lo, hi)));
                    }
                }
                best.map(|(g, t)| (g, f, t))
            })
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .fold(None, |acc: Option<(F, usize, F)>, c| match acc {
                Some(a) if a.0 >= c.0 => Some(a),
                _ => Some(c),
            });
        let Some((gain, f, t)) = best else { break };
        if !(gain > F::zero()) {
            break;
        }
        for &row in &sorted[0] {
            if x.get(row, f) > t {
                leaf_of[row] |= 1 << level;
            }
        }
        features.push(f);
        thresholds.push(t);
    }
    ObliviousTree { leaves: vec![F::zero(); 1 << features.len()], features, thresholds }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn regression_fixture(n: usize) -> (Matrix<f64>, Vec<f64>) {
        let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![(i as f64 * 0.37).sin() * 3.0, ((i * 7) % 13) as f64]).collect();
        let y = rows.iter().map(|r| r[0] * r[0] - 0.5 * r[1] + (r[0] * 5.0).cos()).collect();
        (Matrix::from_rows(&rows).unwrap(), y)
    }

    #[test]
    fn single_stump_round_predicts_the_mean() {
        let (x, y) = regression_fixture(40);
        let cfg =
            GbdtConfig { rounds: 1, learning_rate: 1.0, max_depth: 0, loss: Loss::Squared, ..GbdtConfig::default() };
        let m = GbdtModel::fit_regression(&x, &y, &cfg).unwrap();
        let mean = y.iter().sum::<f64>() / 40.0;
        for i in 0..40 {
            assert!((m.predict_value(x.row(i)).unwrap() - mean).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_rounds_give_priors() {
        let x = Matrix::column(&[0.0_f64, 1.0, 2.0, 3.0]);
        let cfg = GbdtConfig { rounds: 0, ..GbdtConfig::default() };
        let m = GbdtModel::fit_classifier(&x, &[0, 0, 0, 2], 3, &cfg).unwrap();
        let p = m.predict_proba(&[1.0]).unwrap();
        assert!((p[0] - 0.75).abs() < 1e-12);
        assert!(p[1] < 1e-14);
        assert!((p[2] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn squared_loss_decreases_for_every_variant() {
        let (x, y) = regression_fixture(200);
        for variant in [Variant::Plain, Variant::Goss, Variant::Oblivious] {
            let cfg = GbdtConfig { rounds: 30, loss: Loss::Squared, variant, ..GbdtConfig::default() };
            let m = GbdtModel::fit_regression(&x, &y, &cfg).unwrap();
            assert_eq!(m.loss_history.len(), 31);
            for w in m.loss_history.windows(2) {
                assert!(w[1] <= w[0], "{variant:?}: {} -> {}", w[0], w[1]);
            }
        }
    }

    #[test]
    fn classifier_fits_separable_classes() {
        let v: Vec<f64> = (0..90).map(|i| i as f64).collect();
        let labels: Vec<usize> = (0..90).map(|i| i / 30).collect();
        let x = Matrix::column(&v);
        for variant in [Variant::Plain, Variant::Goss, Variant::Oblivious] {
            let cfg = GbdtConfig { rounds: 20, variant, ..GbdtConfig::default() };
            let m = GbdtModel::fit_classifier(&x, &labels, 3, &cfg).unwrap();
            for (i, (row, &label)) in x.iter_rows().zip(&labels).enumerate() {
                assert_eq!(m.predict(row).unwrap(), label, "{variant:?} row {i}");
                let p = m.predict_proba(row).unwrap();
                assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn oblivious_trees_share_tests_per_level() {
        let (x, y) = regression_fixture(100);
        let cfg = GbdtConfig {
            rounds: 3,
            max_depth: 3,
            loss: Loss::Squared,
            variant: Variant::Oblivious,
            ..GbdtConfig::default()
        };
        let m = GbdtModel::fit_regression(&x, &y, &cfg).unwrap();
        for round in &m.rounds {
            match &round[0] {
                BoostTree::Oblivious { tree } => {
                    assert_eq!(tree.features.len(), 3);
                    assert_eq!(tree.leaves.len(), 8);
                }
                BoostTree::Cart { .. } => panic!("expected an oblivious tree"),
            }
        }
    }

    #[test]
    fn argument_errors() {
        let x = Matrix::column(&[0.0_f64, 1.0]);
        let bad_lr = GbdtConfig { learning_rate: 1.5, ..GbdtConfig::default() };
        assert!(GbdtModel::fit_classifier(&x, &[0, 1], 2, &bad_lr).is_err());
        let wrong_loss = GbdtConfig::<f64>::default();
        assert!(GbdtModel::fit_regression(&x, &[0.0, 1.0], &wrong_loss).is_err());
        let m = GbdtModel::fit_classifier(&x, &[0, 1], 2, &GbdtConfig { rounds: 2, ..GbdtConfig::default() }).unwrap();
        assert!(matches!(m.predict_proba(&[0.0, 1.0]), Err(Error::Argument(_))));
    }

    #[test]
    fn residuals_match_finite_differences() {
        let s = [0.3_f64, -1.2, 2.0];
        let r = multiclass_residuals(&s, 1);
        for c in 0..3 {
            let mut up = s;
            let mut dn = s;
            up[c] += 1e-5;
            dn[c] -= 1e-5;
            let fd = (multiclass_logloss(&up, 1) - multiclass_logloss(&dn, 1)) / 2e-5;
            assert!((fd + r[c]).abs() < 1e-8);
        }
    }
}
