//! Margin, strength and correlation of a voting ensemble.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::forest::ForestModel;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestDiagnostics {
    /// Per row: vote share of the true class minus the largest wrong-class share.
    pub margins: Vec<f64>,
    /// Mean margin.
    pub strength: f64,
    /// Mean pairwise Pearson correlation of per-tree raw margins.
    pub correlation: f64,
    /// `max(correlation, 0) * (1 - s^2) / s^2`, or `+inf` when `s <= 0`.
    pub bound: f64,
}

impl ForestDiagnostics {
    /// `votes[k][i]` is the class tree `k` assigns to row `i`.
    pub fn from_votes(votes: &[Vec<usize>], labels: &[usize], n_classes: usize) -> Result<Self> {
        if votes.len() < 2 {
            return Err(Error::Undefined(format!("tree correlation needs at least 2 trees, got {}", votes.len())));
        }
        let n = labels.len();
        if n == 0 {
            return Err(Error::Undefined("no rows to diagnose".into()));
        }
        if votes.iter().any(|v| v.len() != n) {
            return Err(Error::Argument("every tree must vote on every row".into()));
        }
        if votes.iter().flatten().chain(labels).any(|&c| c >= n_classes) {
            return Err(Error::Argument("class code out of range".into()));
        }
        let b = votes.len() as f64;
        let mut margins = Vec::with_capacity(n);
        let mut worst_wrong = Vec::with_capacity(n);
        for (i, &y) in labels.iter().enumerate() {
            let mut counts = vec![0usize; n_classes];
            for tree in votes {
                counts[tree[i]] += 1;
            }
            // most-voted wrong class, lowest code on ties
            let j = (0..n_classes).filter(|&c| c != y).fold(None, |best: Option<usize>, c| match best {
                Some(b) if counts[b] >= counts[c] => Some(b),
                _ => Some(c),
            });
            let wrong = j.map_or(0, |j| counts[j]);
            margins.push((counts[y] as f64 - wrong as f64) / b);
            worst_wrong.push(j);
        }
        let strength = margins.iter().sum::<f64>() / n as f64;

        let raw: Vec<Vec<f64>> = votes
            .iter()
            .map(|tree| {
                tree.iter()
                    .zip(labels)
                    .zip(&worst_wrong)
                    .map(|((&v, &y), j)| f64::from(u8::from(v == y)) - f64::from(u8::from(Some(v) == *j)))
                    .collect()
            })
            .collect();
        let mut total = 0.0;
        let mut pairs = 0usize;
        for a in 0..raw.len() {
            for c in a + 1..raw.len() {
                total += pearson(&raw[a], &raw[c]);
                pairs += 1;
            }
        }
        let correlation = total / pairs as f64;
        // anti-correlated trees can push the mean below zero; an error bound
        // cannot be negative, so the bound uses the clamped value
        let bound = if strength > 0.0 {
            correlation.max(0.0) * (1.0 - strength * strength) / (strength * strength)
        } else {
            f64::INFINITY
        };
        Ok(Self { margins, strength, correlation, bound })
    }

    /// Writes `row_id,margin` lines.
    pub fn write_margins_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["row_id", "margin"])?;
        for (i, m) in self.margins.iter().enumerate() {
            w.write_record([i.to_string(), format!("{m}")])?;
        }
        w.flush().map_err(|e| Error::io("<margins>", e))?;
        Ok(())
    }

    pub fn summary(&self) -> String {
        format!("strength={} correlation={} bound={}", self.strength, self.correlation, self.bound)
    }
}

/// Pearson correlation. Constant vectors correlate 1 with an identical
/// vector and 0 with anything else.
fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return if a == b { 1.0 } else { 0.0 };
    }
    (sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0)
}

/// Diagnostics of `forest` on labeled rows.
pub fn forest_diagnostics<F: Scalar>(
    forest: &ForestModel<F>,
    x: &Matrix<F>,
    labels: &[usize],
) -> Result<ForestDiagnostics> {
    if x.rows() != labels.len() {
        return Err(Error::Argument(format!("{} rows but {} labels", x.rows(), labels.len())));
    }
    let per_row: Vec<Vec<usize>> = x.iter_rows().map(|r| forest.tree_votes(r)).collect::<Result<_>>()?;
    let votes: Vec<Vec<usize>> = (0..forest.trees.len()).map(|k| per_row.iter().map(|v| v[k]).collect()).collect();
    ForestDiagnostics::from_votes(&votes, labels, forest.n_classes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_correct_gives_zero_bound() {
        let votes = vec![vec![0, 1, 2], vec![0, 1, 2], vec![0, 1, 2]];
        let d = ForestDiagnostics::from_votes(&votes, &[0, 1, 2], 3).unwrap();
        assert!(d.margins.iter().all(|&m| m == 1.0));
        assert_eq!(d.strength, 1.0);
        assert_eq!(d.correlation, 1.0);
        assert_eq!(d.bound, 0.0);
    }

    #[test]
    fn identical_trees_correlate_fully() {
        let votes = vec![vec![0, 1, 1, 0], vec![0, 1, 1, 0]];
        let d = ForestDiagnostics::from_votes(&votes, &[0, 0, 1, 1], 2).unwrap();
        assert_eq!(d.correlation, 1.0);
        assert_eq!(d.strength, 0.0);
        assert!(d.bound.is_infinite());
    }

    #[test]
    fn anti_correlated_trees_keep_the_bound_at_zero() {
        // each tree misses a different row, so the raw margins pull apart
        let votes = vec![vec![0, 0, 1], vec![0, 1, 0], vec![1, 0, 0]];
        let d = ForestDiagnostics::from_votes(&votes, &[0, 0, 0], 2).unwrap();
        assert!((d.strength - 1.0 / 3.0).abs() < 1e-15);
        assert!((d.correlation + 0.5).abs() < 1e-12, "{}", d.correlation);
        assert_eq!(d.bound, 0.0);
    }

    #[test]
    fn one_tree_is_undefined() {
        assert!(matches!(ForestDiagnostics::from_votes(&[vec![0]], &[0], 2), Err(Error::Undefined(_))));
    }

    #[test]
    fn margins_csv() {
        let d = ForestDiagnostics::from_votes(&[vec![0, 1], vec![0, 0]], &[0, 1], 2).unwrap();
        let mut buf = Vec::new();
        d.write_margins_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "row_id,margin\n0,1\n1,0\n");
    }
}
