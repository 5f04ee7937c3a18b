use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::dataset::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SplitPair {
    pub train: Dataset,
    pub test: Dataset,
    /// Source row indices of `train` and `test`, ascending.
    pub train_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
    pub seed: u64,
    pub ratio: f64,
}

/// Stratified split: each class sends `round(count * ratio)` of its rows to
/// train, chosen by a seeded shuffle, and the rest to test.
pub fn stratified_split(ds: &Dataset, ratio: f64, seed: u64, target: &str) -> Result<SplitPair> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Argument(format!("split ratio {ratio} is outside (0, 1)")));
    }
    let col = ds.column(target)?;
    if !col.schema().is_discrete() {
        return Err(Error::Type(format!("split target `{target}` is not categorical")));
    }
    let labels = col.require_dense()?;
    let k = col.schema().n_categories();
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (row, &v) in labels.iter().enumerate() {
        by_class[v as usize].push(row);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train_rows = Vec::new();
    let mut test_rows = Vec::new();
    for (code, mut rows) in by_class.into_iter().enumerate() {
        if rows.is_empty() {
            continue;
        }
        if rows.len() < 2 {
            return Err(Error::Stratification {
                class: col.schema().token_of(code).unwrap_or("?").to_string(),
                count: rows.len(),
            });
        }
        let n_train = (rows.len() as f64 * ratio).round() as usize;
        rows.shuffle(&mut rng);
        train_rows.extend_from_slice(&rows[..n_train]);
        test_rows.extend_from_slice(&rows[n_train..]);
    }
    train_rows.sort_unstable();
    test_rows.sort_unstable();
    Ok(SplitPair {
        train: ds.select_rows(&train_rows),
        test: ds.select_rows(&test_rows),
        train_rows,
        test_rows,
        seed,
        ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::dataset::Column;
    use crate::tabular::schema::ColumnSchema;

    fn labelled(counts: &[usize]) -> Dataset {
        let codes: Vec<Option<usize>> =
            counts.iter().enumerate().flat_map(|(c, &n)| std::iter::repeat_n(Some(c), n)).collect();
        let names: Vec<String> = (0..counts.len()).map(|c| format!("c{c}")).collect();
        let y = Column::coded(ColumnSchema::categorical("y", names), &codes).unwrap();
        let x = Column::dense("x", &(0..codes.len()).map(|i| i as f64).collect::<Vec<_>>()).unwrap();
        Dataset::new(vec![x, y]).unwrap()
    }

    fn class_counts(ds: &Dataset, k: usize) -> Vec<usize> {
        let mut c = vec![0; k];
        for v in ds.column("y").unwrap().cells().iter().flatten() {
            c[*v as usize] += 1;
        }
        c
    }

    #[test]
    fn exact_proportions() {
        let s = stratified_split(&labelled(&[60, 40]), 0.8, 1, "y").unwrap();
        assert_eq!(class_counts(&s.train, 2), vec![48, 32]);
        assert_eq!(class_counts(&s.test, 2), vec![12, 8]);
    }

    #[test]
    fn rounding_small_classes() {
        let s = stratified_split(&labelled(&[5, 5]), 0.8, 3, "y").unwrap();
        assert_eq!(class_counts(&s.train, 2), vec![4, 4]);
        assert_eq!(class_counts(&s.test, 2), vec![1, 1]);
    }

    #[test]
    fn deterministic_for_seed() {
        let ds = labelled(&[30, 17, 9]);
        let a = stratified_split(&ds, 0.8, 7, "y").unwrap();
        let b = stratified_split(&ds, 0.8, 7, "y").unwrap();
        assert_eq!(a, b);
        let c = stratified_split(&ds, 0.8, 8, "y").unwrap();
        assert_ne!(a.train_rows, c.train_rows);
    }

    #[test]
    fn singleton_class_fails() {
        assert!(matches!(
            stratified_split(&labelled(&[5, 1]), 0.8, 0, "y"),
            Err(Error::Stratification { count: 1, .. })
        ));
    }

    #[test]
    fn bad_ratio_and_missing_target() {
        assert!(stratified_split(&labelled(&[5, 5]), 1.5, 0, "y").is_err());
        let ds =
            Dataset::new(
                vec![Column::coded(ColumnSchema::categorical("y", ["a"]), &[Some(0), None, Some(0)]).unwrap()],
            )
            .unwrap();
        assert!(matches!(stratified_split(&ds, 0.5, 0, "y"), Err(Error::MissingValue { .. })));
    }
}
