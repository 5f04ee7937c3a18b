//! Kernel SVM trained on the dual problem
//!
//! ```text
//! minimize   F(beta) = 1/2 beta^T Q beta - 1^T beta
//! subject to 0 <= beta_i <= C,  sum_i y_i beta_i = 0,   Q_ij = y_i y_j K(x_i, x_j)
//! ```
//!
//! by pairwise coordinate descent with second-order working-set selection,
//! one binary subproblem per class (one-vs-rest).

use std::borrow::Cow;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kernel::KernelSpec;
use super::standardize::Standardizer;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::{argmax, Scalar};

const TAU: f64 = 1e-12;
/// Below this many rows the full kernel matrix is precomputed and shared.
const FULL_KERNEL_ROWS: usize = 3000;
/// Per-subproblem kernel row cache budget in bytes.
const CACHE_BYTES: usize = 256 << 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmConfig<F> {
    pub c: F,
    /// `None` selects an RBF kernel with `gamma = 1 / feature count`.
    pub kernel: Option<KernelSpec<F>>,
    /// Stop once the maximal KKT violation drops below this.
    pub tol: F,
    /// Iteration cap, in multiples of the training row count.
    pub max_passes: usize,
    /// Kept for configuration symmetry; the solver is deterministic.
    pub seed: u64,
    pub standardize: bool,
}

impl<F: Scalar> Default for SvmConfig<F> {
    fn default() -> Self {
        Self { c: F::one(), kernel: None, tol: F::of(1e-3), max_passes: 200, seed: 42, standardize: true }
    }
}

/// Solution of one binary dual problem, restricted to support vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinarySvm<F> {
    pub support_vectors: Vec<Vec<F>>,
    /// `beta_i * y_i` per support vector.
    pub coef: Vec<F>,
    pub bias: F,
    pub converged: bool,
    pub iterations: usize,
}

impl<F: Scalar> BinarySvm<F> {
    /// `sum_i beta_i y_i K(x_i, row) + b`.
    pub fn decision(&self, kernel: &KernelSpec<F>, row: &[F]) -> F {
        self.support_vectors.iter().zip(&self.coef).fold(self.bias, |acc, (sv, &c)| acc + c * kernel.eval(sv, row))
    }

    /// `sum_i y_i beta_i`; zero at any feasible point.
    pub fn dual_sum(&self) -> F {
        self.coef.iter().copied().sum()
    }

    /// Primal weights `w = sum_i beta_i y_i x_i` (meaningful for the linear kernel).
    pub fn primal_weights(&self) -> Vec<F> {
        let d = self.support_vectors.first().map_or(0, Vec::len);
        let mut w = vec![F::zero(); d];
        for (sv, &c) in self.support_vectors.iter().zip(&self.coef) {
            for (wj, &x) in w.iter_mut().zip(sv) {
                *wj = *wj + c * x;
            }
        }
        w
    }
}

/// One-vs-rest kernel SVM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel<F> {
    pub kernel: KernelSpec<F>,
    pub c: F,
    pub standardizer: Standardizer<F>,
    /// One subproblem per class code.
    pub subproblems: Vec<BinarySvm<F>>,
}

/// Raw dual solution over all training rows.
#[derive(Debug, Clone)]
pub struct DualSolution<F> {
    pub alpha: Vec<F>,
    pub bias: F,
    pub converged: bool,
    pub iterations: usize,
}

struct KernelRows<'a, F> {
    x: &'a Matrix<F>,
    kernel: KernelSpec<F>,
    full: Option<&'a [F]>,
    cache: Vec<Option<(Vec<F>, u64)>>,
    cached: usize,
    capacity: usize,
    clock: u64,
}

impl<'a, F: Scalar> KernelRows<'a, F> {
    fn new(x: &'a Matrix<F>, kernel: KernelSpec<F>, full: Option<&'a [F]>) -> Self {
        let n = x.rows();
        let row_bytes = (n * std::mem::size_of::<F>()).max(1);
        Self {
            x,
            kernel,
            full,
            cache: vec![None; if full.is_some() { 0 } else { n }],
            cached: 0,
            capacity: (CACHE_BYTES / row_bytes).max(2),
            clock: 0,
        }
    }

    fn compute(x: &Matrix<F>, kernel: &KernelSpec<F>, i: usize) -> Vec<F> {
        let xi = x.row(i);
        if x.rows() > 2000 {
            (0..x.rows()).into_par_iter().map(|j| kernel.eval(xi, x.row(j))).collect()
        } else {
            (0..x.rows()).map(|j| kernel.eval(xi, x.row(j))).collect()
        }
    }

    fn row(&mut self, i: usize) -> Cow<'a, [F]> {
        let n = self.x.rows();
        if let Some(full) = self.full {
            return Cow::Borrowed(&full[i * n..(i + 1) * n]);
        }
        self.clock += 1;
        if let Some((row, used)) = self.cache[i].as_mut() {
            *used = self.clock;
            return Cow::Owned(row.clone());
        }
        let row = Self::compute(self.x, &self.kernel, i);
        if self.cached >= self.capacity {
            let victim = self
                .cache
                .iter()
                .enumerate()
                .filter_map(|(k, e)| e.as_ref().map(|(_, u)| (k, *u)))
                .min_by_key(|&(_, u)| u)
                .map(|(k, _)| k)
                .expect("cache is non-empty");
            self.cache[victim] = None;
            self.cached -= 1;
        }
        self.cache[i] = Some((row.clone(), self.clock));
        self.cached += 1;
        Cow::Owned(row)
    }
}

fn full_kernel<F: Scalar>(x: &Matrix<F>, kernel: &KernelSpec<F>) -> Vec<F> {
    let n = x.rows();
    (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let xi = x.row(i);
            (0..n).map(move |j| kernel.eval(xi, x.row(j)))
        })
        .collect()
}

/// Solves one binary dual with labels `y` in {-1, +1}.
pub fn solve_dual<F: Scalar>(
    x: &Matrix<F>,
    y: &[F],
    kernel: &KernelSpec<F>,
    c: F,
    tol: F,
    max_iter: usize,
) -> Result<DualSolution<F>> {
    kernel.validate()?;
    let full = (x.rows() <= FULL_KERNEL_ROWS).then(|| full_kernel(x, kernel));
    solve_with(x, y, kernel, c, tol, max_iter, full.as_deref())
}

fn solve_with<F: Scalar>(
    x: &Matrix<F>,
    y: &[F],
    kernel: &KernelSpec<F>,
    c: F,
    tol: F,
    max_iter: usize,
    full: Option<&[F]>,
) -> Result<DualSolution<F>> {
    let n = x.rows();
    if n == 0 || y.len() != n {
        return Err(Error::Argument(format!("{n} rows but {} labels", y.len())));
    }
    if !(c > F::zero()) {
        return Err(Error::Argument(format!("C must be positive, got {c}")));
    }
    let positives = y.iter().filter(|&&v| v > F::zero()).count();
    if positives == 0 || positives == n {
        // single-sided subproblem: no multipliers move, score is the label
        return Ok(DualSolution {
            alpha: vec![F::zero(); n],
            bias: if positives == n { F::one() } else { -F::one() },
            converged: true,
            iterations: 0,
        });
    }

    let tau = F::of(TAU);
    let mut rows = KernelRows::new(x, *kernel, full);
    let diag: Vec<F> = (0..n).map(|i| kernel.eval(x.row(i), x.row(i))).collect();
    let mut alpha = vec![F::zero(); n];
    let mut grad = vec![-F::one(); n];
    let is_pos = |t: usize| y[t] > F::zero();

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        // i: maximal violator in I_up
        let mut gmax = F::neg_infinity();
        let mut i = usize::MAX;
        for t in 0..n {
            let candidate =
                if is_pos(t) { (alpha[t] < c).then(|| -grad[t]) } else { (alpha[t] > F::zero()).then_some(grad[t]) };
            if let Some(v) = candidate {
                if v >= gmax {
                    gmax = v;
                    i = t;
                }
            }
        }
        if i == usize::MAX {
            converged = true;
            break;
        }
        let ki = rows.row(i);
        // j: second-order choice in I_low
        let mut gmax2 = F::neg_infinity();
        let mut best_obj = F::infinity();
        let mut j = usize::MAX;
        for t in 0..n {
            let (in_low, g) = if is_pos(t) { (alpha[t] > F::zero(), grad[t]) } else { (alpha[t] < c, -grad[t]) };
            if !in_low {
                continue;
            }
            if g >= gmax2 {
                gmax2 = g;
            }
            let grad_diff = gmax + g;
            if grad_diff > F::zero() {
                let mut quad = diag[i] + diag[t] - F::two() * ki[t];
                if quad <= F::zero() {
                    quad = tau;
                }
                let obj = -(grad_diff * grad_diff) / quad;
                if obj <= best_obj {
                    best_obj = obj;
                    j = t;
                }
            }
        }
        if gmax + gmax2 < tol || j == usize::MAX {
            converged = true;
            break;
        }
        iterations += 1;
        let kj = rows.row(j);

        let (yi, yj) = (y[i], y[j]);
        let qij = yi * yj * ki[j];
        let (old_i, old_j) = (alpha[i], alpha[j]);
        if yi != yj {
            let mut quad = diag[i] + diag[j] + F::two() * qij;
            if quad <= F::zero() {
                quad = tau;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] = alpha[i] + delta;
            alpha[j] = alpha[j] + delta;
            if diff > F::zero() {
                if alpha[j] < F::zero() {
                    alpha[j] = F::zero();
                    alpha[i] = diff;
                }
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else {
                if alpha[i] < F::zero() {
                    alpha[i] = F::zero();
                    alpha[j] = -diff;
                }
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = c + diff;
                }
            }
        } else {
            let mut quad = diag[i] + diag[j] - F::two() * qij;
            if quad <= F::zero() {
                quad = tau;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] = alpha[i] - delta;
            alpha[j] = alpha[j] + delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else {
                if alpha[j] < F::zero() {
                    alpha[j] = F::zero();
                    alpha[i] = sum;
                }
                if alpha[i] < F::zero() {
                    alpha[i] = F::zero();
                    alpha[j] = sum;
                }
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] = grad[t] + y[t] * (yi * ki[t] * di + yj * kj[t] * dj);
        }
    }

    Ok(DualSolution { bias: bias_from_gradient(&alpha, &grad, y, c), alpha, converged, iterations })
}

/// Bias from free multipliers (average of `-y_i G_i`), or the midpoint of
/// the feasible interval when none are free.
fn bias_from_gradient<F: Scalar>(alpha: &[F], grad: &[F], y: &[F], c: F) -> F {
    let mut ub = F::infinity();
    let mut lb = F::neg_infinity();
    let mut free = 0usize;
    let mut sum = F::zero();
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        let pos = y[t] > F::zero();
        if alpha[t] >= c {
            if pos {
                lb = lb.max(yg);
            } else {
                ub = ub.min(yg);
            }
        } else if alpha[t] <= F::zero() {
            if pos {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum = sum + yg;
        }
    }
    let rho = if free > 0 { sum / F::of_usize(free) } else { (ub + lb) / F::two() };
    -rho
}

impl<F: Scalar> SvmModel<F> {
    pub fn fit(x: &Matrix<F>, labels: &[usize], n_classes: usize, cfg: &SvmConfig<F>) -> Result<Self> {
        if n_classes < 1 || x.rows() == 0 || x.rows() != labels.len() {
            return Err(Error::Argument(format!("{} rows, {} labels, {n_classes} classes", x.rows(), labels.len())));
        }
        if let Some(&bad) = labels.iter().find(|&&c| c >= n_classes) {
            return Err(Error::Argument(format!("label {bad} out of range")));
        }
        let kernel = cfg.kernel.unwrap_or(KernelSpec::Rbf { gamma: F::one() / F::of_usize(x.cols().max(1)) });
        kernel.validate()?;
        let standardizer = if cfg.standardize { Standardizer::fit(x) } else { Standardizer::identity(x.cols()) };
        let z = standardizer.transform(x)?;
        let full = (z.rows() <= FULL_KERNEL_ROWS).then(|| full_kernel(&z, &kernel));
        let max_iter = cfg.max_passes.saturating_mul(z.rows()).max(1);

        let subproblems = (0..n_classes)
            .into_par_iter()
            .map(|class| {
                let y: Vec<F> = labels.iter().map(|&l| if l == class { F::one() } else { -F::one() }).collect();
                let sol = solve_with(&z, &y, &kernel, cfg.c, cfg.tol, max_iter, full.as_deref())?;
                if !sol.converged {
                    warn!(
                        "SVM subproblem for class {class} stopped after {} iterations without meeting tol",
                        sol.iterations
                    );
                }
                let mut support_vectors = Vec::new();
                let mut coef = Vec::new();
                for (t, &a) in sol.alpha.iter().enumerate() {
                    if a > F::zero() {
                        support_vectors.push(z.row(t).to_vec());
                        coef.push(a * y[t]);
                    }
                }
                Ok(BinarySvm {
                    support_vectors,
                    coef,
                    bias: sol.bias,
                    converged: sol.converged,
                    iterations: sol.iterations,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { kernel, c: cfg.c, standardizer, subproblems })
    }

    pub fn n_classes(&self) -> usize {
        self.subproblems.len()
    }

    /// Per-class one-vs-rest margins for a raw (unstandardized) row.
    pub fn decision(&self, row: &[F]) -> Result<Vec<F>> {
        let z = self.standardizer.transform_row(row)?;
        Ok(self.subproblems.iter().map(|s| s.decision(&self.kernel, &z)).collect())
    }

    /// Argmax of the margins; lowest class code wins ties.
    pub fn predict(&self, row: &[F]) -> Result<usize> {
        Ok(argmax(&self.decision(row)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unscaled<F: Scalar>(kernel: KernelSpec<F>, c: F) -> SvmConfig<F> {
        SvmConfig { c, kernel: Some(kernel), tol: F::of(1e-6), standardize: false, ..SvmConfig::default() }
    }

    #[test]
    fn two_point_problem_has_analytic_solution() {
        let x = Matrix::column(&[-1.0_f64, 1.0]);
        let m = SvmModel::fit(&x, &[0, 1], 2, &unscaled(KernelSpec::Linear, 1e3)).unwrap();
        let s = &m.subproblems[1];
        assert_eq!(s.support_vectors.len(), 2);
        assert!(s.bias.abs() < 1e-9);
        assert!((s.decision(&m.kernel, &[1.0]) - 1.0).abs() < 1e-9);
        assert!((s.decision(&m.kernel, &[-1.0]) + 1.0).abs() < 1e-9);
        assert!(s.decision(&m.kernel, &[0.0]).abs() < 1e-9);
        assert!((s.primal_weights()[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn xor_with_rbf() {
        let x = Matrix::from_rows(&[vec![0.0_f64, 0.0], vec![1.0, 1.0], vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let labels = [0, 0, 1, 1];
        let m = SvmModel::fit(&x, &labels, 2, &unscaled(KernelSpec::Rbf { gamma: 1.0 }, 10.0)).unwrap();
        for (i, &l) in labels.iter().enumerate() {
            assert_eq!(m.predict(x.row(i)).unwrap(), l);
        }
        for s in &m.subproblems {
            assert!(s.dual_sum().abs() < 1e-6);
            assert!(s.coef.iter().all(|c| c.abs() <= 10.0));
        }
    }

    #[test]
    fn single_class_predicts_that_class() {
        let x = Matrix::column(&[0.0_f64, 1.0, 2.0]);
        let m = SvmModel::fit(&x, &[1, 1, 1], 3, &SvmConfig::default()).unwrap();
        for v in [-5.0, 0.5, 9.0] {
            assert_eq!(m.predict(&[v]).unwrap(), 1);
        }
    }

    #[test]
    fn linear_score_matches_primal_form() {
        let rows: Vec<Vec<f64>> = (0..30).map(|i| vec![(i as f64 * 0.7).sin(), (i as f64 * 0.3).cos()]).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let labels: Vec<usize> = rows.iter().map(|r| usize::from(r[0] > r[1])).collect();
        let m = SvmModel::fit(&x, &labels, 2, &unscaled(KernelSpec::Linear, 1.0)).unwrap();
        for s in &m.subproblems {
            let w = s.primal_weights();
            for r in &rows {
                let explicit = w[0] * r[0] + w[1] * r[1] + s.bias;
                assert!((explicit - s.decision(&m.kernel, r)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn fresh_model_scores_bias() {
        let s = BinarySvm::<f64> {
            support_vectors: Vec::new(),
            coef: Vec::new(),
            bias: 0.25,
            converged: true,
            iterations: 0,
        };
        assert_eq!(s.decision(&KernelSpec::Linear, &[3.0]), 0.25);
    }

    #[test]
    fn argument_errors() {
        let x = Matrix::column(&[0.0_f64, 1.0]);
        let bad_gamma = unscaled(KernelSpec::Rbf { gamma: 0.0 }, 1.0);
        assert!(SvmModel::fit(&x, &[0, 1], 2, &bad_gamma).is_err());
        let m = SvmModel::fit(&x, &[0, 1], 2, &SvmConfig::default()).unwrap();
        assert!(matches!(m.decision(&[1.0, 2.0]), Err(Error::Argument(_))));
        let bad_c = unscaled(KernelSpec::Linear, 0.0);
        assert!(SvmModel::fit(&x, &[0, 1], 2, &bad_c).is_err());
    }

    #[test]
    fn iteration_cap_reports_non_convergence() {
        let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![(i as f64 * 1.7).sin(), (i as f64 * 0.9).cos()]).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let y: Vec<f64> = (0..40).map(|i| if i % 3 == 0 { 1.0 } else { -1.0 }).collect();
        let sol = solve_dual(&x, &y, &KernelSpec::Rbf { gamma: 1.0 }, 10.0, 1e-9, 1).unwrap();
        assert!(!sol.converged);
        assert_eq!(sol.iterations, 1);
    }
}
