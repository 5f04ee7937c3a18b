//! CART trees over presorted feature columns.
//!
//! Each feature keeps an index array sorted by value; a node owns the same
//! contiguous segment of every array, and splitting a node stably partitions
//! those segments. A level therefore costs O(rows x features).

use rand::seq::index;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::{argmax, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeParams {
    /// `None` grows until leaves are pure or too small to split.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Features examined per split; `None` means all of them.
    pub mtry: Option<usize>,
    pub seed: u64,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self { max_depth: None, min_samples_leaf: 1, mtry: None, seed: 42 }
    }
}

/// Flat node storage; children are indices into [`Tree::nodes`].
///
/// Rows with `x[feature] <= threshold` go left. Leaves hold a single value
/// for regression and per-class counts for classification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node<F> {
    Split { feature: usize, threshold: F, left: usize, right: usize },
    Leaf { values: Vec<F> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree<F> {
    pub nodes: Vec<Node<F>>,
    pub n_features: usize,
}

/// What a tree is fitted against.
#[derive(Debug, Clone, Copy)]
pub enum TreeTarget<'a, F> {
    Regression(&'a [F]),
    Classification { labels: &'a [usize], n_classes: usize },
}

impl<F: Scalar> Tree<F> {
    /// A single leaf.
    pub fn constant(values: Vec<F>, n_features: usize) -> Self {
        Self { nodes: vec![Node::Leaf { values }], n_features }
    }

    fn check(&self, row: &[F]) -> Result<()> {
        if row.len() != self.n_features {
            return Err(Error::Argument(format!("tree expects {} features, row has {}", self.n_features, row.len())));
        }
        Ok(())
    }

    /// Index of the leaf `row` lands in. The row length is not checked.
    pub fn leaf_index(&self, row: &[F]) -> usize {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Split { feature, threshold, left, right } => {
                    at = if row[*feature] <= *threshold { *left } else { *right }
                }
                Node::Leaf { .. } => return at,
            }
        }
    }

    pub fn leaf_values(&self, row: &[F]) -> Result<&[F]> {
        self.check(row)?;
        match &self.nodes[self.leaf_index(row)] {
            Node::Leaf { values } => Ok(values),
            Node::Split { .. } => unreachable!("leaf_index stops at leaves"),
        }
    }

    /// Regression output.
    pub fn predict_value(&self, row: &[F]) -> Result<F> {
        Ok(self.leaf_values(row)?[0])
    }

    /// Majority class of the leaf; lowest code wins ties.
    pub fn predict_class(&self, row: &[F]) -> Result<usize> {
        Ok(argmax(self.leaf_values(row)?))
    }

    pub(crate) fn set_leaf(&mut self, node: usize, values: Vec<F>) {
        if let Node::Leaf { values: v } = &mut self.nodes[node] {
            *v = values;
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    /// Longest root-to-leaf path, counted in edges.
    pub fn depth(&self) -> usize {
        fn walk<F>(nodes: &[Node<F>], at: usize) -> usize {
            match &nodes[at] {
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
                Node::Leaf { .. } => 0,
            }
        }
        walk(&self.nodes, 0)
    }
}

/// Node statistics and the split score they induce.
pub(crate) trait Criterion<F: Scalar>: Sync {
    type Acc: Clone + Send + Sync;
    fn empty(&self) -> Self::Acc;
    fn push(&self, acc: &mut Self::Acc, row: usize);
    fn count(&self, acc: &Self::Acc) -> usize;
    /// Impurity decrease (times node weight) of splitting `parent` into
    /// `left` and `parent - left`.
    fn gain(&self, parent: &Self::Acc, left: &Self::Acc) -> F;
    /// True when the node has nothing left to explain.
    fn is_pure(&self, acc: &Self::Acc) -> bool;
    fn leaf(&self, acc: &Self::Acc) -> Vec<F>;
}

/// Weighted squared error: gain = S_l^2/W_l + S_r^2/W_r - S^2/W.
pub(crate) struct SquaredError<'a, F> {
    pub y: &'a [F],
    pub w: Option<&'a [F]>,
}

#[derive(Clone, Copy)]
pub(crate) struct Moments<F> {
    w: F,
    s: F,
    q: F,
    n: usize,
}

impl<F: Scalar> SquaredError<'_, F> {
    fn weight(&self, row: usize) -> F {
        self.w.map_or(F::one(), |w| w[row])
    }
}

fn side_score<F: Scalar>(s: F, w: F) -> F {
    if w > F::zero() {
        s * s / w
    } else {
        F::zero()
    }
}

impl<F: Scalar> Criterion<F> for SquaredError<'_, F> {
    type Acc = Moments<F>;

    fn empty(&self) -> Moments<F> {
        Moments { w: F::zero(), s: F::zero(), q: F::zero(), n: 0 }
    }

    fn push(&self, acc: &mut Moments<F>, row: usize) {
        let w = self.weight(row);
        let y = self.y[row];
        acc.w = acc.w + w;
        acc.s = acc.s + w * y;
        acc.q = acc.q + w * y * y;
        acc.n += 1;
    }

    fn count(&self, acc: &Moments<F>) -> usize {
        acc.n
    }

    fn gain(&self, parent: &Moments<F>, left: &Moments<F>) -> F {
        side_score(left.s, left.w) + side_score(parent.s - left.s, parent.w - left.w) - side_score(parent.s, parent.w)
    }

    fn is_pure(&self, acc: &Moments<F>) -> bool {
        let sse = acc.q - side_score(acc.s, acc.w);
        sse <= F::of(1e-12) * (acc.q + F::epsilon())
    }

    fn leaf(&self, acc: &Moments<F>) -> Vec<F> {
        let mean = if acc.w > F::zero() { acc.s / acc.w } else { F::zero() };
        vec![mean]
    }
}

/// Gini impurity: gain = sum_c l_c^2/n_l + sum_c r_c^2/n_r - sum_c p_c^2/n.
pub(crate) struct Gini<'a> {
    pub labels: &'a [usize],
    pub n_classes: usize,
}

fn gini_score<F: Scalar>(counts: impl Iterator<Item = usize>, n: usize) -> F {
    if n == 0 {
        return F::zero();
    }
    let sq: usize = counts.map(|c| c * c).sum();
    F::of_usize(sq) / F::of_usize(n)
}

impl<F: Scalar> Criterion<F> for Gini<'_> {
    type Acc = (Vec<usize>, usize);

    fn empty(&self) -> Self::Acc {
        (vec![0; self.n_classes], 0)
    }

    fn push(&self, acc: &mut Self::Acc, row: usize) {
        acc.0[self.labels[row]] += 1;
        acc.1 += 1;
    }

    fn count(&self, acc: &Self::Acc) -> usize {
        acc.1
    }

    fn gain(&self, parent: &Self::Acc, left: &Self::Acc) -> F {
        // integer sums keep pure and perfectly balanced splits exact
        let l: F = gini_score(left.0.iter().copied(), left.1);
        let r: F = gini_score(parent.0.iter().zip(&left.0).map(|(p, l)| p - l), parent.1 - left.1);
        let p: F = gini_score(parent.0.iter().copied(), parent.1);
        l + r - p
    }

    fn is_pure(&self, acc: &Self::Acc) -> bool {
        acc.0.iter().filter(|&&c| c > 0).count() <= 1
    }

    fn leaf(&self, acc: &Self::Acc) -> Vec<F> {
        acc.0.iter().map(|&c| F::of_usize(c)).collect()
    }
}

/// Split threshold between two adjacent distinct values; always `lo <= t < hi`.
pub(crate) fn midpoint<F: Scalar>(lo: F, hi: F) -> F {
    let mid = lo + (hi - lo) * F::half();
    if mid < hi {
        mid
    } else {
        lo
    }
}

/// Per-feature orderings of `sample` (a multiset of row indices).
pub(crate) fn presort<F: Scalar>(x: &Matrix<F>, sample: &[usize]) -> Vec<Vec<usize>> {
    (0..x.cols())
        .into_par_iter()
        .map(|f| {
            let mut order = sample.to_vec();
            order.sort_by(|&a, &b| x.get(a, f).total_order(&x.get(b, f)).then(a.cmp(&b)));
            order
        })
        .collect()
}

struct Candidate<F> {
    gain: F,
    feature: usize,
    threshold: F,
}

struct Builder<'a, F, C> {
    x: &'a Matrix<F>,
    crit: &'a C,
    params: TreeParams,
    rng: ChaCha8Rng,
    sorted: Vec<Vec<usize>>,
    scratch: Vec<usize>,
    goes_left: Vec<bool>,
    nodes: Vec<Node<F>>,
}

impl<F: Scalar, C: Criterion<F>> Builder<'_, F, C> {
    fn best_in_feature(&self, f: usize, start: usize, end: usize, parent: &C::Acc) -> Option<Candidate<F>> {
        let order = &self.sorted[f][start..end];
        let min_leaf = self.params.min_samples_leaf.max(1);
        let n = order.len();
        let mut left = self.crit.empty();
        let mut best: Option<Candidate<F>> = None;
        for i in 0..n - 1 {
            self.crit.push(&mut left, order[i]);
            let (lo, hi) = (self.x.get(order[i], f), self.x.get(order[i + 1], f));
            if !(lo < hi) || i + 1 < min_leaf || n - i - 1 < min_leaf {
                continue;
            }
            let gain = self.crit.gain(parent, &left);
            if best.as_ref().is_none_or(|b| gain > b.gain) {
                best = Some(Candidate { gain, feature: f, threshold: midpoint(lo, hi) });
            }
        }
        best
    }

    fn features_for_split(&mut self) -> Vec<usize> {
        let d = self.x.cols();
        match self.params.mtry {
            Some(m) if m < d => {
                let mut pick = index::sample(&mut self.rng, d, m.max(1)).into_vec();
                pick.sort_unstable();
                pick
            }
            _ => (0..d).collect(),
        }
    }

    fn grow(&mut self, start: usize, end: usize, depth: usize) -> usize {
        let mut acc = self.crit.empty();
        for &row in &self.sorted[0][start..end] {
            self.crit.push(&mut acc, row);
        }
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { values: self.crit.leaf(&acc) });
        let depth_left = self.params.max_depth.is_none_or(|m| depth < m);
        if !depth_left || self.crit.count(&acc) < 2 * self.params.min_samples_leaf.max(1) || self.crit.is_pure(&acc) {
            return id;
        }

        let features = self.features_for_split();
        let wide = (end - start) * features.len() > 1 << 15;
        let per_feature: Vec<Option<Candidate<F>>> = if wide {
            features.par_iter().map(|&f| self.best_in_feature(f, start, end, &acc)).collect()
        } else {
            features.iter().map(|&f| self.best_in_feature(f, start, end, &acc)).collect()
        };
        // fixed-order reduction: earliest feature wins ties
        let mut best: Option<Candidate<F>> = None;
        for c in per_feature.into_iter().flatten() {
            if best.as_ref().is_none_or(|b| c.gain > b.gain) {
                best = Some(c);
            }
        }
        let Some(best) = best else { return id };

        for &row in &self.sorted[0][start..end] {
            self.goes_left[row] = self.x.get(row, best.feature) <= best.threshold;
        }
        let mut n_left = 0;
        for f in 0..self.sorted.len() {
            let seg = &mut self.sorted[f][start..end];
            self.scratch.clear();
            let mut w = 0;
            for k in 0..seg.len() {
                let row = seg[k];
                if self.goes_left[row] {
                    seg[w] = row;
                    w += 1;
                } else {
                    self.scratch.push(row);
                }
            }
            seg[w..].copy_from_slice(&self.scratch);
            n_left = w;
        }
        let mid = start + n_left;
        let left = self.grow(start, mid, depth + 1);
        let right = self.grow(mid, end, depth + 1);
        self.nodes[id] = Node::Split { feature: best.feature, threshold: best.threshold, left, right };
        id
    }
}

/// Grows a tree on the rows in `sample` (duplicates allowed).
pub(crate) fn grow_tree<F: Scalar, C: Criterion<F>>(
    x: &Matrix<F>,
    sample: &[usize],
    crit: &C,
    params: TreeParams,
) -> Tree<F> {
    if x.cols() == 0 {
        let mut acc = crit.empty();
        for &r in sample {
            crit.push(&mut acc, r);
        }
        return Tree::constant(crit.leaf(&acc), 0);
    }
    grow_presorted(x, presort(x, sample), crit, params)
}

/// Like [`grow_tree`] with the per-feature orderings already computed.
pub(crate) fn grow_presorted<F: Scalar, C: Criterion<F>>(
    x: &Matrix<F>,
    sorted: Vec<Vec<usize>>,
    crit: &C,
    params: TreeParams,
) -> Tree<F> {
    let n = sorted.first().map_or(0, Vec::len);
    let mut builder = Builder {
        x,
        crit,
        params,
        rng: ChaCha8Rng::seed_from_u64(params.seed),
        sorted,
        scratch: Vec::with_capacity(n),
        goes_left: vec![false; x.rows()],
        nodes: Vec::new(),
    };
    builder.grow(0, n, 0);
    Tree { nodes: builder.nodes, n_features: x.cols() }
}

/// Restricts full-data orderings to the rows with `keep[row]` set.
pub(crate) fn restrict_presorted(full: &[Vec<usize>], keep: &[bool]) -> Vec<Vec<usize>> {
    full.iter().map(|order| order.iter().copied().filter(|&r| keep[r]).collect()).collect()
}

/// Fits a single CART tree on every row of `x`.
pub fn fit_tree<F: Scalar>(x: &Matrix<F>, target: TreeTarget<'_, F>, params: TreeParams) -> Result<Tree<F>> {
    if x.rows() == 0 {
        return Err(Error::Argument("cannot fit a tree on zero rows".into()));
    }
    let rows: Vec<usize> = (0..x.rows()).collect();
    match target {
        TreeTarget::Regression(y) => {
            if y.len() != x.rows() {
                return Err(Error::Argument(format!("{} rows but {} targets", x.rows(), y.len())));
            }
            if y.iter().any(|v| !v.is_finite()) {
                return Err(Error::Argument("regression targets must be finite".into()));
            }
            Ok(grow_tree(x, &rows, &SquaredError { y, w: None }, params))
        }
        TreeTarget::Classification { labels, n_classes } => {
            if labels.len() != x.rows() {
                return Err(Error::Argument(format!("{} rows but {} labels", x.rows(), labels.len())));
            }
            if let Some(&bad) = labels.iter().find(|&&c| c >= n_classes) {
                return Err(Error::Argument(format!("label {bad} out of range")));
            }
            Ok(grow_tree(x, &rows, &Gini { labels, n_classes }, params))
        }
    }
}
