use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tabular::Dataset;

/// Observed counts of attribute values (rows) against class labels (columns).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyTable {
    observed: Vec<Vec<u64>>,
    row_labels: Vec<String>,
    col_labels: Vec<String>,
}

impl ContingencyTable {
    pub fn new(observed: Vec<Vec<u64>>, row_labels: Vec<String>, col_labels: Vec<String>) -> Result<Self> {
        if observed.len() != row_labels.len() {
            return Err(Error::Argument(format!("{} count rows but {} row labels", observed.len(), row_labels.len())));
        }
        if observed.iter().any(|r| r.len() != col_labels.len()) {
            return Err(Error::Argument("ragged contingency table".into()));
        }
        Ok(Self { observed, row_labels, col_labels })
    }

    /// Table with positional labels.
    pub fn from_counts(observed: Vec<Vec<u64>>) -> Result<Self> {
        let m = observed.len();
        let k = observed.first().map_or(0, Vec::len);
        Self::new(observed, (0..m).map(|i| i.to_string()).collect(), (0..k).map(|j| j.to_string()).collect())
    }

    pub fn observed(&self) -> &[Vec<u64>] {
        &self.observed
    }

    pub fn row_labels(&self) -> &[String] {
        &self.row_labels
    }

    pub fn col_labels(&self) -> &[String] {
        &self.col_labels
    }

    pub fn total(&self) -> u64 {
        self.observed.iter().flatten().sum()
    }

    pub fn row_totals(&self) -> Vec<u64> {
        self.observed.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_totals(&self) -> Vec<u64> {
        (0..self.col_labels.len()).map(|j| self.observed.iter().map(|r| r[j]).sum()).collect()
    }

    /// Copy without all-zero rows and columns.
    pub fn trimmed(&self) -> Self {
        let rows: Vec<usize> = self.row_totals().iter().enumerate().filter(|(_, &t)| t > 0).map(|(i, _)| i).collect();
        let cols: Vec<usize> = self.col_totals().iter().enumerate().filter(|(_, &t)| t > 0).map(|(j, _)| j).collect();
        Self {
            observed: rows.iter().map(|&i| cols.iter().map(|&j| self.observed[i][j]).collect()).collect(),
            row_labels: rows.iter().map(|&i| self.row_labels[i].clone()).collect(),
            col_labels: cols.iter().map(|&j| self.col_labels[j].clone()).collect(),
        }
    }
}

/// Counts co-occurrences of a discrete feature with a discrete target. Rows
/// where either value is missing are skipped.
pub fn contingency(ds: &Dataset, feature: &str, target: &str) -> Result<ContingencyTable> {
    let f = ds.column(feature)?;
    let t = ds.column(target)?;
    for c in [f, t] {
        if !c.schema().is_discrete() {
            return Err(Error::Type(format!("column `{}` is not discrete; bin it first", c.name())));
        }
    }
    let m = f.schema().n_categories();
    let k = t.schema().n_categories();
    let mut observed = vec![vec![0u64; k]; m];
    for row in 0..ds.n_rows() {
        if let (Some(i), Some(j)) = (f.code(row), t.code(row)) {
            observed[i][j] += 1;
        }
    }
    ContingencyTable::new(observed, f.schema().categories.clone(), t.schema().categories.clone())
}

/// Pearson chi-squared statistic: sum over cells of `(O - E)^2 / E` with
/// `E_ij = row_i * col_j / N`. Zero-margin rows and columns are dropped.
pub fn chi2_statistic<F: Scalar>(table: &ContingencyTable) -> Result<F> {
    let table = table.trimmed();
    let n = table.total();
    if n == 0 {
        return Err(Error::Undefined("contingency table has no counts".into()));
    }
    let n = F::of(n as f64);
    let rows = table.row_totals();
    let cols = table.col_totals();
    let mut stat = F::zero();
    for (i, row) in table.observed.iter().enumerate() {
        let ri = F::of(rows[i] as f64);
        for (j, &o) in row.iter().enumerate() {
            let expected = ri * F::of(cols[j] as f64) / n;
            let d = F::of(o as f64) - expected;
            stat = stat + d * d / expected;
        }
    }
    Ok(stat)
}
