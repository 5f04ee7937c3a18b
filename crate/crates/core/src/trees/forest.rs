use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cart::{grow_tree, Gini, Tree, TreeParams};
use super::derive_seed;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::{argmax, Scalar};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// Features tried per split; `None` uses `floor(sqrt(d))`.
    pub mtry: Option<usize>,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self { n_trees: 100, mtry: None, max_depth: None, min_samples_leaf: 1, bootstrap: true, seed: 42 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel<F> {
    pub trees: Vec<Tree<F>>,
    pub tree_seeds: Vec<u64>,
    pub mtry: usize,
    pub n_classes: usize,
    pub n_features: usize,
}

impl<F: Scalar> ForestModel<F> {
    pub fn fit(x: &Matrix<F>, labels: &[usize], n_classes: usize, cfg: &ForestConfig) -> Result<Self> {
        if cfg.n_trees < 1 {
            return Err(Error::Argument("a forest needs at least one tree".into()));
        }
        if x.rows() == 0 || x.rows() != labels.len() {
            return Err(Error::Argument(format!("{} rows but {} labels", x.rows(), labels.len())));
        }
        if let Some(&bad) = labels.iter().find(|&&c| c >= n_classes) {
            return Err(Error::Argument(format!("label {bad} out of range")));
        }
        let d = x.cols();
        let mtry = cfg.mtry.unwrap_or_else(|| (d as f64).sqrt().floor() as usize).clamp(1, d.max(1));
        let n = x.rows();
        let tree_seeds: Vec<u64> = (0..cfg.n_trees as u64).map(|k| derive_seed(cfg.seed, k)).collect();
        let crit = Gini { labels, n_classes };
        let trees = tree_seeds
            .par_iter()
            .map(|&seed| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let sample: Vec<usize> =
                    if cfg.bootstrap { (0..n).map(|_| rng.gen_range(0..n)).collect() } else { (0..n).collect() };
                let params = TreeParams {
                    max_depth: cfg.max_depth,
                    min_samples_leaf: cfg.min_samples_leaf,
                    mtry: Some(mtry),
                    seed: rng.gen(),
                };
                grow_tree(x, &sample, &crit, params)
            })
            .collect();
        Ok(Self { trees, tree_seeds, mtry, n_classes, n_features: d })
    }

    fn check(&self, row: &[F]) -> Result<()> {
        if row.len() != self.n_features {
            return Err(Error::Argument(format!("forest expects {} features, row has {}", self.n_features, row.len())));
        }
        Ok(())
    }

    /// Class voted by each tree.
    pub fn tree_votes(&self, row: &[F]) -> Result<Vec<usize>> {
        self.check(row)?;
        self.trees.iter().map(|t| t.predict_class(row)).collect()
    }

    /// Vote fractions per class.
    pub fn predict_proba(&self, row: &[F]) -> Result<Vec<F>> {
        let mut counts = vec![0usize; self.n_classes];
        for v in self.tree_votes(row)? {
            counts[v] += 1;
        }
        let b = F::of_usize(self.trees.len());
        Ok(counts.into_iter().map(|c| F::of_usize(c) / b).collect())
    }

    /// Plurality vote; lowest class code wins ties.
    pub fn predict(&self, row: &[F]) -> Result<usize> {
        Ok(argmax(&self.predict_proba(row)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trees::{fit_tree, TreeTarget};

    fn noisy(n: usize, seed: u64) -> (Matrix<f64>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..n {
            let a: f64 = rng.gen_range(-1.0..1.0);
            let b: f64 = rng.gen_range(-1.0..1.0);
            let c: f64 = rng.gen_range(-1.0..1.0);
            let clean = usize::from(a + 0.5 * b > 0.0);
            let label = if rng.gen_bool(0.15) { 1 - clean } else { clean };
            rows.push(vec![a, b, c]);
            labels.push(label);
        }
        (Matrix::from_rows(&rows).unwrap(), labels)
    }

    #[test]
    fn one_tree_without_bootstrap_is_cart() {
        let (x, y) = noisy(120, 1);
        let cfg = ForestConfig { n_trees: 1, mtry: Some(3), bootstrap: false, ..ForestConfig::default() };
        let forest = ForestModel::fit(&x, &y, 2, &cfg).unwrap();
        let tree =
            fit_tree(&x, TreeTarget::Classification { labels: &y, n_classes: 2 }, TreeParams::default()).unwrap();
        for i in 0..x.rows() {
            let probe: Vec<f64> = x.row(i).iter().map(|v| v + 0.01).collect();
            assert_eq!(forest.predict(&probe).unwrap(), tree.predict_class(&probe).unwrap());
        }
    }

    #[test]
    fn same_seed_same_forest() {
        let (x, y) = noisy(100, 2);
        let cfg = ForestConfig { n_trees: 10, ..ForestConfig::default() };
        assert_eq!(ForestModel::fit(&x, &y, 2, &cfg).unwrap(), ForestModel::fit(&x, &y, 2, &cfg).unwrap());
    }

    #[test]
    fn many_trees_beat_one() {
        let (x, y) = noisy(500, 3);
        let (train, test): (Vec<usize>, Vec<usize>) = (0..500).partition(|i| i % 5 != 0);
        let xt = x.select_rows(&train);
        let yt: Vec<usize> = train.iter().map(|&i| y[i]).collect();
        let accuracy = |b: usize| {
            let cfg = ForestConfig { n_trees: b, seed: 11, ..ForestConfig::default() };
            let m = ForestModel::fit(&xt, &yt, 2, &cfg).unwrap();
            test.iter().filter(|&&i| m.predict(x.row(i)).unwrap() == y[i]).count()
        };
        assert!(accuracy(100) > accuracy(1));
    }

    #[test]
    fn argument_errors() {
        let (x, y) = noisy(10, 4);
        let cfg = ForestConfig { n_trees: 0, ..ForestConfig::default() };
        assert!(matches!(ForestModel::fit(&x, &y, 2, &cfg), Err(Error::Argument(_))));
        let m = ForestModel::fit(&x, &y, 2, &ForestConfig { n_trees: 2, ..ForestConfig::default() }).unwrap();
        assert!(matches!(m.predict_proba(&[0.0]), Err(Error::Argument(_))));
    }
}
