use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tabular::{Column, ColumnSchema, Dataset};

pub const MATERNAL_AGE_ABOVE_40: &str = "maternal_age_above_40";
pub const NUMBER_OF_SYMPTOMS: &str = "number_of_symptoms";
pub const ANY_INHERITED_GENE: &str = "any_inherited_gene";
pub const HIGH_WBC_COUNT: &str = "high_wbc_count";
pub const HEART_OR_RESPIRATORY_ISSUES: &str = "heart_or_respiratory_issues";

/// Names of the columns `engineer_features` appends, in order.
pub const ENGINEERED_COLUMNS: [&str; 5] =
    [MATERNAL_AGE_ABOVE_40, NUMBER_OF_SYMPTOMS, ANY_INHERITED_GENE, HIGH_WBC_COUNT, HEART_OR_RESPIRATORY_ISSUES];

/// Source columns and thresholds for the engineered features. Defaults name
/// the columns of the public genetic-disorder dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineerConfig {
    pub maternal_age: String,
    pub age_threshold: f64,
    pub symptoms: Vec<String>,
    pub maternal_gene: String,
    pub paternal_gene: String,
    pub white_blood_cells: String,
    pub wbc_threshold: f64,
    /// Coded column where code 0 means tachycardia.
    pub heart_rate: String,
    /// Coded column where code 0 means tachypnea.
    pub respiratory_rate: String,
}

impl Default for EngineerConfig {
    fn default() -> Self {
        Self {
            maternal_age: "Mother's age".into(),
            age_threshold: 40.0,
            symptoms: (1..=5).map(|i| format!("Symptom {i}")).collect(),
            maternal_gene: "Maternal gene".into(),
            paternal_gene: "Paternal gene".into(),
            white_blood_cells: "White Blood cell count (thousand per microliter)".into(),
            wbc_threshold: 11.0,
            heart_rate: "Heart Rate (rates/min".into(),
            respiratory_rate: "Respiratory Rate (breaths/min)".into(),
        }
    }
}

fn flag(b: bool) -> Option<f64> {
    Some(if b { 1.0 } else { 0.0 })
}

fn binary_column(name: &str, values: Vec<Option<f64>>) -> Result<Column> {
    Column::new(ColumnSchema::binary(name, "0", "1"), values)
}

/// Appends the five engineered columns. Source cells must be observed;
/// running on already-engineered data is rejected.
pub fn engineer_features(ds: &Dataset, cfg: &EngineerConfig) -> Result<Dataset> {
    if let Some(existing) = ENGINEERED_COLUMNS.iter().find(|c| ds.has_column(c)) {
        return Err(Error::Schema(format!("dataset already has engineered column `{existing}`")));
    }
    let dense = |name: &str| -> Result<Vec<f64>> { ds.column(name)?.require_dense() };

    let age = dense(&cfg.maternal_age)?;
    let symptoms = cfg.symptoms.iter().map(|s| dense(s)).collect::<Result<Vec<_>>>()?;
    let maternal = dense(&cfg.maternal_gene)?;
    let paternal = dense(&cfg.paternal_gene)?;
    let wbc = dense(&cfg.white_blood_cells)?;
    let heart = dense(&cfg.heart_rate)?;
    let resp = dense(&cfg.respiratory_rate)?;

    let n = ds.n_rows();
    let above_40 = age.iter().map(|&a| flag(a >= cfg.age_threshold)).collect();
    let n_symptoms = (0..n).map(|r| Some(symptoms.iter().filter(|s| s[r] != 0.0).count() as f64)).collect();
    let inherited = (0..n).map(|r| flag(maternal[r] != 0.0 || paternal[r] != 0.0)).collect();
    let high_wbc = wbc.iter().map(|&w| flag(w > cfg.wbc_threshold)).collect();
    let heart_resp = (0..n).map(|r| flag(heart[r] == 0.0 || resp[r] == 0.0)).collect();

    ds.with_column(binary_column(MATERNAL_AGE_ABOVE_40, above_40)?)?
        .with_column(Column::numeric(NUMBER_OF_SYMPTOMS, n_symptoms)?)?
        .with_column(binary_column(ANY_INHERITED_GENE, inherited)?)?
        .with_column(binary_column(HIGH_WBC_COUNT, high_wbc)?)?
        .with_column(binary_column(HEART_OR_RESPIRATORY_ISSUES, heart_resp)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn source(rows: &[[f64; 9]]) -> Dataset {
        let cfg = EngineerConfig { symptoms: vec!["s1".into(), "s2".into()], ..EngineerConfig::default() };
        let col = |i: usize| -> Vec<Option<f64>> { rows.iter().map(|r| Some(r[i])).collect() };
        let yes_no = |name: &str, i| Column::new(ColumnSchema::binary(name, "No", "Yes"), col(i)).unwrap();
        Dataset::new(vec![
            Column::numeric(cfg.maternal_age.clone(), col(0)).unwrap(),
            Column::numeric("s1", col(1)).unwrap(),
            Column::numeric("s2", col(2)).unwrap(),
            yes_no(&cfg.maternal_gene, 3),
            yes_no(&cfg.paternal_gene, 4),
            Column::numeric(cfg.white_blood_cells.clone(), col(5)).unwrap(),
            Column::new(ColumnSchema::binary(&cfg.heart_rate, "Tachycardia", "Normal"), col(6)).unwrap(),
            Column::new(ColumnSchema::binary(&cfg.respiratory_rate, "Tachypnea", "Normal"), col(7)).unwrap(),
            Column::numeric("other", col(8)).unwrap(),
        ])
        .unwrap()
    }

    fn cfg() -> EngineerConfig {
        EngineerConfig { symptoms: vec!["s1".into(), "s2".into()], ..EngineerConfig::default() }
    }

    #[test]
    fn engineered_values() {
        let ds = source(&[
            [40.0, 1.0, 1.0, 1.0, 0.0, 12.0, 1.0, 1.0, 5.0],
            [39.0, 0.0, 1.0, 0.0, 0.0, 11.0, 0.0, 1.0, 6.0],
            [25.0, 0.0, 0.0, 0.0, 1.0, 3.0, 1.0, 0.0, 7.0],
        ]);
        let out = engineer_features(&ds, &cfg()).unwrap();
        let get = |n: &str| out.column(n).unwrap().require_dense().unwrap();
        assert_eq!(get(MATERNAL_AGE_ABOVE_40), [1.0, 0.0, 0.0]);
        assert_eq!(get(NUMBER_OF_SYMPTOMS), [2.0, 1.0, 0.0]);
        assert_eq!(get(ANY_INHERITED_GENE), [1.0, 0.0, 1.0]);
        assert_eq!(get(HIGH_WBC_COUNT), [1.0, 0.0, 0.0]);
        assert_eq!(get(HEART_OR_RESPIRATORY_ISSUES), [0.0, 1.0, 1.0]);
        // existing columns untouched
        for c in ds.columns() {
            assert_eq!(out.column(c.name()).unwrap(), c);
        }
    }

    #[test]
    fn second_run_is_rejected() {
        let ds = source(&[[30.0, 0.0, 0.0, 0.0, 0.0, 5.0, 1.0, 1.0, 0.0]]);
        let once = engineer_features(&ds, &cfg()).unwrap();
        assert!(matches!(engineer_features(&once, &cfg()), Err(Error::Schema(_))));
    }

    #[test]
    fn missing_source_column_or_cell() {
        let ds = source(&[[30.0, 0.0, 0.0, 0.0, 0.0, 5.0, 1.0, 1.0, 0.0]]);
        let mut bad = cfg();
        bad.white_blood_cells = "nope".into();
        assert!(matches!(engineer_features(&ds, &bad), Err(Error::Schema(_))));
        let holey = ds.replace_column(Column::numeric("s1", vec![None]).unwrap()).unwrap();
        assert!(matches!(engineer_features(&holey, &cfg()), Err(Error::MissingValue { .. })));
    }
}
