use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::Algorithm;
use super::pipeline::{DesignSpec, FeaturePipeline};
use crate::error::{Error, Result};
use crate::linear::{LogisticModel, SvmModel};
use crate::trees::{ForestModel, GbdtModel};

/// Bumped whenever the serialized layout changes; older files are rejected.
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FittedModel {
    Logistic(LogisticModel<f64>),
    Svm(SvmModel<f64>),
    Forest(ForestModel<f64>),
    Gbdt(GbdtModel<f64>),
}

impl FittedModel {
    /// Per-class scores used for ROC curves: probabilities, or one-vs-rest
    /// margins for the SVM.
    pub fn scores(&self, row: &[f64]) -> Result<Vec<f64>> {
        match self {
            FittedModel::Logistic(m) => m.predict_proba(row),
            FittedModel::Svm(m) => m.decision(row),
            FittedModel::Forest(m) => m.predict_proba(row),
            FittedModel::Gbdt(m) => m.predict_proba(row),
        }
    }

    pub fn predict(&self, row: &[f64]) -> Result<usize> {
        match self {
            FittedModel::Logistic(m) => m.predict(row),
            FittedModel::Svm(m) => m.predict(row),
            FittedModel::Forest(m) => m.predict(row),
            FittedModel::Gbdt(m) => m.predict(row),
        }
    }

    /// Number of one-vs-rest subproblems or output classes.
    pub fn n_outputs(&self) -> usize {
        match self {
            FittedModel::Logistic(m) => m.n_classes(),
            FittedModel::Svm(m) => m.n_classes(),
            FittedModel::Forest(m) => m.n_classes,
            FittedModel::Gbdt(m) => m.n_outputs(),
        }
    }
}

/// Self-describing saved model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub format_version: u32,
    pub algorithm: Algorithm,
    pub classes: Vec<String>,
    pub pipeline: FeaturePipeline,
    pub design: DesignSpec,
    pub model: FittedModel,
    pub config_hash: String,
    pub seed: u64,
    pub train_accuracy: f64,
}

impl ModelArtifact {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Probe {
            format_version: Option<u32>,
        }
        let probe: Probe = serde_json::from_str(text).map_err(|e| Error::Artifact(format!("not an artifact: {e}")))?;
        match probe.format_version {
            Some(FORMAT_VERSION) => {}
            Some(v) => {
                return Err(Error::Artifact(format!("format version {v} is not supported (expected {FORMAT_VERSION})")))
            }
            None => return Err(Error::Artifact("missing format_version".into())),
        }
        serde_json::from_str(text).map_err(|e| Error::Artifact(format!("malformed artifact: {e}")))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
