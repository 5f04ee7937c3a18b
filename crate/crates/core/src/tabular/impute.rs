use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use super::stats::{sorted_median, sorted_mode};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImputePolicy {
    /// Mode for discrete columns, median for numeric ones.
    #[default]
    ModeMedian,
    /// Remove every row with a missing cell in the covered columns.
    DropRows,
}

/// Fill values fitted on one dataset and replayable on another.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Imputer {
    pub policy: ImputePolicy,
    pub columns: Vec<String>,
    /// Fill value per column; empty under `DropRows`.
    pub fills: BTreeMap<String, f64>,
}

impl Imputer {
    pub fn fit(ds: &Dataset, policy: ImputePolicy, columns: &[String]) -> Result<Self> {
        let mut fills = BTreeMap::new();
        if policy == ImputePolicy::ModeMedian {
            for name in columns {
                let col = ds.column(name)?;
                let mut values: Vec<f64> = col.cells().iter().flatten().copied().collect();
                if values.is_empty() {
                    return Err(Error::Unimputable(name.clone()));
                }
                values.sort_by(f64::total_cmp);
                let fill = if col.schema().is_discrete() { sorted_mode(&values) } else { sorted_median(&values) };
                fills.insert(name.clone(), fill.expect("non-empty"));
            }
        } else {
            for name in columns {
                ds.column(name)?;
            }
        }
        Ok(Self { policy, columns: columns.to_vec(), fills })
    }

    pub fn apply(&self, ds: &Dataset) -> Result<Dataset> {
        match self.policy {
            ImputePolicy::ModeMedian => {
                let mut out = ds.clone();
                for (name, &fill) in &self.fills {
                    let idx = out.column_index(name)?;
                    for cell in out.columns_mut()[idx].cells_mut() {
                        if cell.is_none() {
                            *cell = Some(fill);
                        }
                    }
                }
                Ok(out)
            }
            ImputePolicy::DropRows => {
                let idx = self.columns.iter().map(|n| ds.column_index(n)).collect::<Result<Vec<_>>>()?;
                let keep: Vec<usize> =
                    (0..ds.n_rows()).filter(|&r| idx.iter().all(|&c| ds.columns()[c].get(r).is_some())).collect();
                Ok(ds.select_rows(&keep))
            }
        }
    }
}

/// Imputes every column of `ds` under `policy`.
pub fn impute_missing(ds: &Dataset, policy: ImputePolicy) -> Result<Dataset> {
    let names: Vec<String> = ds.names().map(str::to_string).collect();
    Imputer::fit(ds, policy, &names)?.apply(ds)
}
