use log::warn;

use crate::error::{Error, Result};
use crate::tabular::{Column, ColumnSchema, Dataset};

/// Equal-frequency cut points. A value `v` falls in bin
/// `edges.partition_point(|e| *e <= v)`; duplicate cuts are merged so the
/// number of bins can be smaller than requested.
pub fn quantile_edges(values: &[f64], bins: usize) -> Vec<f64> {
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mut edges: Vec<f64> = Vec::new();
    if n == 0 {
        return edges;
    }
    for k in 1..bins {
        let cut = sorted[k * n / bins];
        if cut > sorted[0] && edges.last().is_none_or(|&last| cut > last) {
            edges.push(cut);
        }
    }
    edges
}

pub fn assign_bin(edges: &[f64], v: f64) -> usize {
    edges.partition_point(|&e| e <= v)
}

#[derive(Debug, Clone)]
pub struct Binned {
    pub dataset: Dataset,
    pub edges: Vec<f64>,
    /// Set when the column was constant and collapsed to one bin.
    pub degenerate: bool,
}

/// Replaces a numeric column with its equal-frequency bin indices, stored as
/// a categorical column with labels `"0"`, `"1"`, ...
pub fn bin_continuous(ds: &Dataset, col: &str, bins: usize) -> Result<Binned> {
    if bins < 2 {
        return Err(Error::Argument(format!("bins must be at least 2, got {bins}")));
    }
    let column = ds.column(col)?;
    if column.schema().is_discrete() {
        return Err(Error::Type(format!("column `{col}` is not numeric")));
    }
    let observed: Vec<f64> = column.cells().iter().flatten().copied().collect();
    let edges = quantile_edges(&observed, bins);
    let degenerate = edges.is_empty();
    if degenerate {
        warn!("column `{col}` is constant; binned into a single bin");
    }
    let binned = apply_bins(column, &edges)?;
    Ok(Binned { dataset: ds.replace_column(binned)?, edges, degenerate })
}

pub(crate) fn apply_bins(column: &Column, edges: &[f64]) -> Result<Column> {
    let mut schema = ColumnSchema::categorical(column.name(), (0..=edges.len()).map(|b| b.to_string()));
    schema.role = column.role();
    let cells = column.cells().iter().map(|c| c.map(|v| assign_bin(edges, v) as f64)).collect();
    Column::new(schema, cells)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binned(values: &[f64], bins: usize) -> (Vec<usize>, bool) {
        let ds = Dataset::new(vec![Column::dense("x", values).unwrap()]).unwrap();
        let out = bin_continuous(&ds, "x", bins).unwrap();
        let codes = (0..values.len()).map(|r| out.dataset.column("x").unwrap().code(r).unwrap()).collect();
        (codes, out.degenerate)
    }

    #[test]
    fn median_cut() {
        let v: Vec<f64> = (1..=10).map(f64::from).collect();
        assert_eq!(binned(&v, 2).0, [0, 0, 0, 0, 0, 1, 1, 1, 1, 1]);
    }

    #[test]
    fn equal_frequency_thirds() {
        let v: Vec<f64> = (1..=9).map(f64::from).collect();
        let (codes, _) = binned(&v, 3);
        let sizes: Vec<usize> = (0..3).map(|b| codes.iter().filter(|&&c| c == b).count()).collect();
        assert_eq!(sizes, [3, 3, 3]);
    }

    #[test]
    fn constant_column_is_single_bin() {
        let (codes, degenerate) = binned(&[2.5; 6], 4);
        assert_eq!(codes, [0; 6]);
        assert!(degenerate);
    }

    #[test]
    fn rejects_bad_arguments() {
        let ds = Dataset::new(vec![Column::dense("x", &[1.0, 2.0]).unwrap()]).unwrap();
        assert!(bin_continuous(&ds, "x", 1).is_err());
        let cat = Column::coded(ColumnSchema::categorical("c", ["a"]), &[Some(0)]).unwrap();
        let ds = Dataset::new(vec![cat]).unwrap();
        assert!(matches!(bin_continuous(&ds, "c", 2), Err(Error::Type(_))));
    }

    proptest::proptest! {
        #[test]
        fn bins_are_monotone(values in proptest::collection::vec(-1e3f64..1e3, 1..80), bins in 2usize..12) {
            let edges = quantile_edges(&values, bins);
            proptest::prop_assert!(edges.len() < bins);
            let mut sorted = values.clone();
            sorted.sort_by(f64::total_cmp);
            let codes: Vec<usize> = sorted.iter().map(|&v| assign_bin(&edges, v)).collect();
            proptest::prop_assert!(codes.windows(2).all(|w| w[0] <= w[1]));
        }
    }
}
