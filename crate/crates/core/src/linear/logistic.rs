use serde::{Deserialize, Serialize};

use super::standardize::Standardizer;
use crate::error::{Error, Result};
use crate::matrix::{dot, Matrix};
use crate::scalar::{argmax, sigmoid, Scalar};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogisticConfig {
    /// Upper bound on the step size; the fit lowers it to `1 / L` where `L`
    /// is the estimated Lipschitz constant of the loss gradient.
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
    /// Kept for configuration symmetry; full-batch descent from a zero start
    /// does not draw random numbers.
    pub seed: u64,
    pub standardize: bool,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self { learning_rate: 1.0, epochs: 300, l2: 1e-4, seed: 42, standardize: true }
    }
}

/// One binary scorer `pi(x) = sigmoid(intercept + weights . x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryLogistic<F> {
    pub intercept: F,
    pub weights: Vec<F>,
}

impl<F: Scalar> BinaryLogistic<F> {
    pub fn zeros(d: usize) -> Self {
        Self { intercept: F::zero(), weights: vec![F::zero(); d] }
    }

    pub fn probability(&self, row: &[F]) -> F {
        sigmoid(self.intercept + dot(&self.weights, row))
    }
}

/// `log(1 + e^z)` without overflow.
fn softplus<F: Scalar>(z: F) -> F {
    if z > F::zero() {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Mean negative log-likelihood plus `l2 / 2 * |weights|^2` and its
/// gradient `(d intercept, d weights)`. Targets are 0/1.
pub fn logistic_loss_and_grad<F: Scalar>(params: &BinaryLogistic<F>, x: &Matrix<F>, y: &[F], l2: F) -> (F, F, Vec<F>) {
    let n = F::of_usize(x.rows());
    let mut loss = F::zero();
    let mut g0 = F::zero();
    let mut gw = vec![F::zero(); x.cols()];
    for (row, &t) in x.iter_rows().zip(y) {
        let z = params.intercept + dot(&params.weights, row);
        loss = loss + softplus(z) - t * z;
        let r = sigmoid(z) - t;
        g0 = g0 + r;
        for (g, &v) in gw.iter_mut().zip(row) {
            *g = *g + r * v;
        }
    }
    let penalty: F = params.weights.iter().map(|&w| w * w).sum();
    let loss = loss / n + l2 * penalty / F::two();
    for (g, &w) in gw.iter_mut().zip(&params.weights) {
        *g = *g / n + l2 * w;
    }
    (loss, g0 / n, gw)
}

/// Largest eigenvalue of `Z^T Z / n` with `Z = [1 | x]`, by power iteration.
fn gram_spectral_radius<F: Scalar>(x: &Matrix<F>) -> F {
    let d = x.cols() + 1;
    let n = F::of_usize(x.rows().max(1));
    let mut v = vec![F::one() / F::of_usize(d).sqrt(); d];
    let mut lambda = F::zero();
    for _ in 0..100 {
        let mut next = vec![F::zero(); d];
        for row in x.iter_rows() {
            let zv = v[0] + dot(&v[1..], row);
            next[0] = next[0] + zv;
            for (nj, &xj) in next[1..].iter_mut().zip(row) {
                *nj = *nj + zv * xj;
            }
        }
        next.iter_mut().for_each(|e| *e = *e / n);
        let norm = next.iter().map(|&e| e * e).sum::<F>().sqrt();
        if norm <= F::zero() {
            return F::zero();
        }
        let converged = (norm - lambda).abs() <= F::of(1e-10) * norm;
        lambda = norm;
        v = next.into_iter().map(|e| e / norm).collect();
        if converged {
            break;
        }
    }
    lambda
}

/// Full-batch gradient descent on one binary problem. Returns the fitted
/// scorer and the loss before each epoch plus the final loss.
pub fn fit_binary_logistic<F: Scalar>(
    x: &Matrix<F>,
    y: &[F],
    learning_rate: F,
    epochs: usize,
    l2: F,
) -> Result<(BinaryLogistic<F>, Vec<F>)> {
    let mut params = BinaryLogistic::zeros(x.cols());
    let mut history = Vec::with_capacity(epochs + 1);
    for epoch in 0..=epochs {
        let (loss, g0, gw) = logistic_loss_and_grad(&params, x, y, l2);
        if !loss.is_finite() {
            return Err(Error::Divergence { epoch, detail: format!("loss became {loss}") });
        }
        history.push(loss);
        if epoch == epochs {
            break;
        }
        params.intercept = params.intercept - learning_rate * g0;
        for (w, g) in params.weights.iter_mut().zip(gw) {
            *w = *w - learning_rate * g;
        }
    }
    Ok((params, history))
}

/// One-vs-rest logistic regression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel<F> {
    pub standardizer: Standardizer<F>,
    /// One scorer per class code.
    pub scorers: Vec<BinaryLogistic<F>>,
    pub learning_rate_used: F,
    /// Final training loss per class.
    pub final_loss: Vec<F>,
    pub trained: bool,
}

impl<F: Scalar> Default for LogisticModel<F> {
    fn default() -> Self {
        Self {
            standardizer: Standardizer::identity(0),
            scorers: Vec::new(),
            learning_rate_used: F::zero(),
            final_loss: Vec::new(),
            trained: false,
        }
    }
}

impl<F: Scalar> LogisticModel<F> {
    pub fn fit(x: &Matrix<F>, labels: &[usize], n_classes: usize, cfg: &LogisticConfig) -> Result<Self> {
        if n_classes < 2 {
            return Err(Error::Argument("logistic regression needs at least 2 classes".into()));
        }
        if x.rows() == 0 || x.rows() != labels.len() {
            return Err(Error::Argument(format!("{} rows but {} labels", x.rows(), labels.len())));
        }
        if let Some(&bad) = labels.iter().find(|&&c| c >= n_classes) {
            return Err(Error::Argument(format!("label {bad} out of range")));
        }
        let standardizer = if cfg.standardize { Standardizer::fit(x) } else { Standardizer::identity(x.cols()) };
        let z = standardizer.transform(x)?;
        let l2 = F::of(cfg.l2);
        let lipschitz = F::of(0.25) * gram_spectral_radius(&z) + l2;
        let mut lr = F::of(cfg.learning_rate);
        if lipschitz > F::zero() && lr > F::one() / lipschitz {
            lr = F::one() / lipschitz;
        }
        let mut scorers = Vec::with_capacity(n_classes);
        let mut final_loss = Vec::with_capacity(n_classes);
        for c in 0..n_classes {
            let y: Vec<F> = labels.iter().map(|&l| if l == c { F::one() } else { F::zero() }).collect();
            let (params, history) = fit_binary_logistic(&z, &y, lr, cfg.epochs, l2)?;
            scorers.push(params);
            final_loss.push(*history.last().expect("at least one loss"));
        }
        Ok(Self { standardizer, scorers, learning_rate_used: lr, final_loss, trained: true })
    }

    pub fn n_classes(&self) -> usize {
        self.scorers.len()
    }

    /// One-vs-rest probabilities normalized to sum to one.
    pub fn predict_proba(&self, row: &[F]) -> Result<Vec<F>> {
        if !self.trained {
            return Err(Error::Untrained);
        }
        let z = self.standardizer.transform_row(row)?;
        let raw: Vec<F> = self.scorers.iter().map(|s| s.probability(&z)).collect();
        let total: F = raw.iter().copied().sum();
        if total > F::zero() {
            Ok(raw.into_iter().map(|p| p / total).collect())
        } else {
            Ok(vec![F::one() / F::of_usize(raw.len()); raw.len()])
        }
    }

    pub fn predict(&self, row: &[F]) -> Result<usize> {
        Ok(argmax(&self.predict_proba(row)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_parameters_give_one_half() {
        let p = BinaryLogistic::<f64>::zeros(3);
        assert_eq!(p.probability(&[1.0, -4.0, 9.0]), 0.5);
    }

    #[test]
    fn separable_one_dimensional() {
        let x = Matrix::column(&[-3.0_f64, -2.0, -1.0, -0.5, 0.5, 1.0, 2.0, 3.0]);
        let labels = [0, 0, 0, 0, 1, 1, 1, 1];
        let m = LogisticModel::fit(&x, &labels, 2, &LogisticConfig::default()).unwrap();
        assert!(m.scorers[1].weights[0] > 0.0);
        for (i, &l) in labels.iter().enumerate() {
            assert_eq!(m.predict(x.row(i)).unwrap(), l);
        }
    }

    #[test]
    fn symmetric_data_gives_even_odds_at_midpoint() {
        let x = Matrix::column(&[-2.0_f64, -1.0, 1.0, 2.0]);
        let m = LogisticModel::fit(&x, &[0, 0, 1, 1], 2, &LogisticConfig::default()).unwrap();
        let p = m.predict_proba(&[0.0]).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-12 && (p[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn untrained_model_errors() {
        let m = LogisticModel::<f64>::default();
        assert!(matches!(m.predict_proba(&[1.0]), Err(Error::Untrained)));
    }

    #[test]
    fn divergence_names_epoch() {
        let x = Matrix::column(&[1e200_f64, -1e200]);
        let err = fit_binary_logistic(&x, &[1.0, 0.0], 1e200, 5, 0.0).unwrap_err();
        assert!(matches!(err, Error::Divergence { epoch: 1, .. }), "{err}");
    }

    #[test]
    fn loss_is_non_increasing() {
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|i| {
                let t = i as f64;
                vec![(t * 0.37).sin() * 3.0, (t * 1.3).cos(), t / 10.0]
            })
            .collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let labels: Vec<usize> =
            rows.iter().map(|r| usize::from(r[0] + r[1] > 0.2) + usize::from(r[2] > 3.0)).collect();
        let cfg = LogisticConfig::default();
        let m = LogisticModel::fit(&x, &labels, 3, &cfg).unwrap();
        let z = m.standardizer.transform(&x).unwrap();
        for c in 0..3 {
            let y: Vec<f64> = labels.iter().map(|&l| f64::from(u8::from(l == c))).collect();
            let (_, hist) = fit_binary_logistic(&z, &y, m.learning_rate_used, cfg.epochs, cfg.l2).unwrap();
            assert!(hist.windows(2).all(|w| w[1] <= w[0] + 1e-15), "class {c}");
        }
    }

    #[test]
    fn probabilities_sum_to_one_and_are_monotone() {
        let rows: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64, ((i * 7) % 5) as f64]).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let labels: Vec<usize> = (0..30).map(|i| usize::from(i >= 15)).collect();
        let m = LogisticModel::fit(&x, &labels, 2, &LogisticConfig::default()).unwrap();
        for i in 0..100 {
            let p = m.predict_proba(&[i as f64 * 0.37 - 5.0, (i % 9) as f64]).unwrap();
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(p.iter().all(|&v| v > 0.0 && v < 1.0));
        }
        assert!(m.scorers[1].weights[0] > 0.0);
        let sweep: Vec<f64> = (0..50)
            .map(|i| m.scorers[1].probability(&m.standardizer.transform_row(&[i as f64 - 10.0, 2.0]).unwrap()))
            .collect();
        assert!(sweep.windows(2).all(|w| w[1] >= w[0]));
    }
}
