//! Replayable preprocessing: everything fitted on the training split that
//! evaluation must reapply unchanged.

use log::{info, warn};
use serde::{Deserialize, Serialize};

use super::config::{RunConfig, TargetKind};
use crate::error::{Error, Result};
use crate::features::{engineer_features, rank_features, select_top_k, EngineerConfig, FeatureRanking};
use crate::matrix::Matrix;
use crate::tabular::{ColumnKind, ColumnSchema, Dataset, Imputer, Role, SplitPair};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeaturePipeline {
    pub target: TargetKind,
    pub target_column: String,
    pub classes: Vec<String>,
    /// Raw columns as ingested (ignored columns already dropped).
    pub raw_schema: Vec<ColumnSchema>,
    pub imputer: Imputer,
    pub engineering: Option<EngineerConfig>,
    pub ranking: FeatureRanking,
    pub selected: Vec<String>,
    /// Columns of the prepared CSV files: selected features then the target.
    pub prepared_schema: Vec<ColumnSchema>,
    /// Hash binding the prepared files to the preparation settings.
    pub fingerprint: String,
}

impl FeaturePipeline {
    /// Fits imputation, engineering and selection on `split.train`.
    pub(crate) fn fit(cfg: &RunConfig, raw: &Dataset, split: &SplitPair) -> Result<(Self, Dataset, Dataset)> {
        let target = raw.target(cfg.target.role())?.schema().clone();
        let features = raw.feature_names();
        let imputer = Imputer::fit(&split.train, cfg.imputation, &features)?;
        let engineering = cfg.features.engineer.then(|| cfg.features.engineering.clone());
        let train = transform(&split.train, &imputer, engineering.as_ref())?;
        let ranking = rank_features(&train, &target.name, cfg.features.bins)?;
        let k = cfg.features.top_k.min(ranking.len());
        if k < cfg.features.top_k {
            warn!(
                "features.top_k = {} exceeds the {} rankable features; keeping all",
                cfg.features.top_k,
                ranking.len()
            );
        }
        let selected = select_top_k(&ranking, k)?;
        info!("selected {} feature(s): {}", selected.len(), selected.join(", "));
        let mut keep = selected.clone();
        keep.push(target.name.clone());
        let train = train.select_columns(&keep)?;
        let pipeline = Self {
            target: cfg.target,
            target_column: target.name.clone(),
            classes: target.categories.clone(),
            raw_schema: raw.schema(),
            imputer,
            engineering,
            ranking,
            selected,
            prepared_schema: train.schema(),
            fingerprint: String::new(),
        };
        let test = pipeline.apply_raw(&split.test)?;
        Ok((pipeline, train, test))
    }

    /// Replays the fitted steps on raw rows: drops rows without a target,
    /// imputes, engineers and keeps the selected columns.
    pub fn apply_raw(&self, raw: &Dataset) -> Result<Dataset> {
        let target = raw.column(&self.target_column)?;
        let labeled: Vec<usize> = (0..raw.n_rows()).filter(|&r| target.get(r).is_some()).collect();
        let ds = raw.select_rows(&labeled);
        let ds = transform(&ds, &self.imputer, self.engineering.as_ref())?;
        let mut keep = self.selected.clone();
        keep.push(self.target_column.clone());
        ds.select_columns(&keep)
    }

    /// Raw columns the pipeline reads, including the target.
    pub fn required_raw_columns(&self) -> Vec<String> {
        self.raw_schema.iter().map(|c| c.name.clone()).collect()
    }

    pub fn labels(&self, ds: &Dataset) -> Result<Vec<usize>> {
        let col = ds.column(&self.target_column)?;
        (0..ds.n_rows())
            .map(|r| col.code(r).ok_or_else(|| Error::MissingValue { column: self.target_column.clone(), row: r }))
            .collect()
    }
}

fn transform(ds: &Dataset, imputer: &Imputer, engineering: Option<&EngineerConfig>) -> Result<Dataset> {
    let ds = imputer.apply(ds)?;
    match engineering {
        Some(cfg) => engineer_features(&ds, cfg),
        None => Ok(ds),
    }
}

/// How one prepared column becomes model inputs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "encoding", rename_all = "snake_case")]
pub enum Encoding {
    /// The value itself (numeric columns, or codes for tree models).
    Value,
    /// One indicator per category.
    OneHot { categories: usize },
}

/// Maps prepared feature columns to a dense design matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DesignSpec {
    pub columns: Vec<(String, Encoding)>,
}

impl DesignSpec {
    /// One-hot for categoricals with more than two levels when `one_hot`,
    /// otherwise raw values and codes.
    pub fn new(schema: &[ColumnSchema], one_hot: bool) -> Self {
        let columns = schema
            .iter()
            .filter(|c| c.role == Role::Feature)
            .map(|c| {
                let enc = if one_hot && c.kind == ColumnKind::Categorical && c.n_categories() > 2 {
                    Encoding::OneHot { categories: c.n_categories() }
                } else {
                    Encoding::Value
                };
                (c.name.clone(), enc)
            })
            .collect();
        Self { columns }
    }

    pub fn width(&self) -> usize {
        self.columns
            .iter()
            .map(|(_, e)| match e {
                Encoding::Value => 1,
                Encoding::OneHot { categories } => *categories,
            })
            .sum()
    }

    pub fn matrix(&self, ds: &Dataset) -> Result<Matrix<f64>> {
        let n = ds.n_rows();
        let width = self.width();
        let mut data = vec![0.0; n * width];
        let mut offset = 0;
        for (name, enc) in &self.columns {
            let col = ds.column(name)?;
            let values = col.require_dense()?;
            match enc {
                Encoding::Value => {
                    for (r, v) in values.iter().enumerate() {
                        data[r * width + offset] = *v;
                    }
                    offset += 1;
                }
                Encoding::OneHot { categories } => {
                    for (r, v) in values.iter().enumerate() {
                        let code = *v as usize;
                        if code >= *categories {
                            return Err(Error::Schema(format!("column `{name}` code {code} out of range")));
                        }
                        data[r * width + offset + code] = 1.0;
                    }
                    offset += categories;
                }
            }
        }
        Matrix::new(n, width, data)
    }
}
