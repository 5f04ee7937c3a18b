use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use crate::error::Result;

/// Summary of one column over its observed cells. Aggregates are `None`
/// when every cell is missing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub name: String,
    pub rows: usize,
    pub missing_count: usize,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub mode: Option<f64>,
    pub median: Option<f64>,
    /// Count per category code; empty for numeric columns.
    pub histogram: Vec<usize>,
}

impl ColumnStats {
    pub fn all_missing(&self) -> bool {
        self.missing_count == self.rows
    }
}

pub fn column_stats(ds: &Dataset, col: &str) -> Result<ColumnStats> {
    let column = ds.column(col)?;
    let mut values: Vec<f64> = column.cells().iter().flatten().copied().collect();
    values.sort_by(f64::total_cmp);
    let histogram = if column.schema().is_discrete() {
        let mut h = vec![0; column.schema().n_categories()];
        for &v in &values {
            h[v as usize] += 1;
        }
        h
    } else {
        Vec::new()
    };
    Ok(ColumnStats {
        name: col.to_string(),
        rows: ds.n_rows(),
        missing_count: column.missing_count(),
        min: values.first().copied(),
        max: values.last().copied(),
        mode: sorted_mode(&values),
        median: sorted_median(&values),
        histogram,
    })
}

/// Median of ascending values; mean of the middle pair for even counts.
pub(crate) fn sorted_median(sorted: &[f64]) -> Option<f64> {
    let n = sorted.len();
    match n {
        0 => None,
        _ if n % 2 == 1 => Some(sorted[n / 2]),
        _ => Some((sorted[n / 2 - 1] + sorted[n / 2]) / 2.0),
    }
}

/// Most frequent of ascending values; the smallest wins ties.
pub(crate) fn sorted_mode(sorted: &[f64]) -> Option<f64> {
    let mut best: Option<(f64, usize)> = None;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        if best.is_none_or(|(_, n)| j - i > n) {
            best = Some((sorted[i], j - i));
        }
        i = j;
    }
    best.map(|(v, _)| v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::dataset::Column;
    use crate::tabular::schema::ColumnSchema;

    #[test]
    fn constant_column() {
        let ds = Dataset::new(vec![Column::dense("c", &[3.0, 3.0, 3.0]).unwrap()]).unwrap();
        let s = column_stats(&ds, "c").unwrap();
        assert_eq!((s.min, s.max, s.median, s.mode), (Some(3.0), Some(3.0), Some(3.0), Some(3.0)));
        assert_eq!(s.missing_count, 0);
    }

    #[test]
    fn all_missing_flags_aggregates() {
        let ds = Dataset::new(vec![Column::numeric("c", vec![None, None]).unwrap()]).unwrap();
        let s = column_stats(&ds, "c").unwrap();
        assert!(s.all_missing());
        assert_eq!(s.missing_count, 2);
        assert!(s.min.is_none() && s.median.is_none() && s.mode.is_none());
    }

    #[test]
    fn categorical_histogram_ignores_missing() {
        let schema = ColumnSchema::categorical("g", ["F", "M", "A"]);
        let col = Column::coded(schema, &[Some(0), Some(2), None, Some(2)]).unwrap();
        let ds = Dataset::new(vec![col]).unwrap();
        let s = column_stats(&ds, "g").unwrap();
        assert_eq!(s.histogram, vec![1, 0, 2]);
        assert_eq!(s.mode, Some(2.0));
        assert_eq!(s.missing_count, 1);
    }

    #[test]
    fn unknown_column_errors() {
        let ds = Dataset::new(vec![Column::dense("c", &[1.0]).unwrap()]).unwrap();
        assert!(column_stats(&ds, "nope").is_err());
    }

    #[test]
    fn median_and_mode_helpers() {
        assert_eq!(sorted_median(&[1.0, 3.0]), Some(2.0));
        assert_eq!(sorted_mode(&[0.0, 0.0, 1.0, 1.0, 2.0]), Some(0.0));
    }
}
