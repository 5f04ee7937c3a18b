use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::features::EngineerConfig;
use crate::linear::{LogisticConfig, SvmConfig};
use crate::tabular::{ImputePolicy, Role};
use crate::trees::{ForestConfig, GbdtConfig, Loss};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    GeneticDisorder,
    DisorderSubclass,
}

impl TargetKind {
    pub fn role(self) -> Role {
        match self {
            TargetKind::GeneticDisorder => Role::TargetDisorder,
            TargetKind::DisorderSubclass => Role::TargetSubclass,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            TargetKind::GeneticDisorder => "genetic_disorder",
            TargetKind::DisorderSubclass => "disorder_subclass",
        }
    }

    /// Task label used in report tables.
    pub fn title(self) -> &'static str {
        match self {
            TargetKind::GeneticDisorder => "Genetic Disorder",
            TargetKind::DisorderSubclass => "Disorder Subclass",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Logistic,
    Svm,
    RandomForest,
    GbdtPlain,
    GbdtGoss,
    GbdtOblivious,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Logistic,
        Algorithm::Svm,
        Algorithm::RandomForest,
        Algorithm::GbdtPlain,
        Algorithm::GbdtGoss,
        Algorithm::GbdtOblivious,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Algorithm::Logistic => "logistic",
            Algorithm::Svm => "svm",
            Algorithm::RandomForest => "random_forest",
            Algorithm::GbdtPlain => "gbdt_plain",
            Algorithm::GbdtGoss => "gbdt_goss",
            Algorithm::GbdtOblivious => "gbdt_oblivious",
        }
    }

    /// Linear models see one-hot categoricals; trees see integer codes.
    pub fn is_linear(self) -> bool {
        matches!(self, Algorithm::Logistic | Algorithm::Svm)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub ratio: f64,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self { ratio: 0.8, seed: 42 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    pub engineer: bool,
    /// Equal-frequency bins for numeric features during chi-squared ranking.
    pub bins: usize,
    /// Number of top-ranked features kept.
    pub top_k: usize,
    pub engineering: EngineerConfig,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self { engineer: true, bins: 10, top_k: 25, engineering: EngineerConfig::default() }
    }
}

/// The chosen algorithm plus hyperparameters for every family; only the
/// block matching `algorithm` is used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub algorithm: Algorithm,
    pub logistic: LogisticConfig,
    pub svm: SvmConfig<f64>,
    pub forest: ForestConfig,
    pub gbdt: GbdtConfig<f64>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::GbdtPlain,
            logistic: LogisticConfig::default(),
            svm: SvmConfig::default(),
            forest: ForestConfig::default(),
            gbdt: GbdtConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub input: PathBuf,
    pub schema: PathBuf,
    pub target: TargetKind,
    pub split: SplitConfig,
    pub imputation: ImputePolicy,
    pub features: FeatureConfig,
    pub model: ModelConfig,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            input: PathBuf::from("data/train.csv"),
            schema: PathBuf::from("schemas/genetic_disorder.schema.json"),
            target: TargetKind::GeneticDisorder,
            split: SplitConfig::default(),
            imputation: ImputePolicy::default(),
            features: FeatureConfig::default(),
            model: ModelConfig::default(),
            output_dir: PathBuf::from("out"),
        }
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn invalid(msg: String) -> Error {
    Error::Config(msg)
}

impl RunConfig {
    /// Parses a JSON document. Relative paths resolve against the
    /// directory containing the file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_json(&text)?;
        if let Some(base) = path.parent() {
            cfg.resolve_paths(base);
        }
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| invalid(format!("invalid config: {e}")))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        for p in [&mut self.input, &mut self.schema, &mut self.output_dir] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    /// Replaces the split seed and every model seed.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.split.seed = seed;
        self.model.logistic.seed = seed;
        self.model.svm.seed = seed;
        self.model.forest.seed = seed;
        self.model.gbdt.seed = seed;
        self
    }

    /// Checks every invariant that does not need file access.
    pub fn validate(&self) -> Result<()> {
        let s = &self.split;
        if !(s.ratio > 0.0 && s.ratio < 1.0) {
            return Err(invalid(format!("split.ratio must lie in (0, 1), got {}", s.ratio)));
        }
        let f = &self.features;
        if f.top_k < 1 {
            return Err(invalid("features.top_k must be at least 1".into()));
        }
        if f.bins < 2 {
            return Err(invalid(format!("features.bins must be at least 2, got {}", f.bins)));
        }
        let m = &self.model;
        let l = &m.logistic;
        if !(l.learning_rate > 0.0 && l.learning_rate.is_finite()) || l.epochs < 1 || !(l.l2 >= 0.0) {
            return Err(invalid("logistic needs learning_rate > 0, epochs >= 1, l2 >= 0".into()));
        }
        if !(m.svm.c > 0.0 && m.svm.c.is_finite()) {
            return Err(invalid(format!("svm.c must be positive, got {}", m.svm.c)));
        }
        if !(m.svm.tol > 0.0) || m.svm.max_passes < 1 {
            return Err(invalid("svm needs tol > 0 and max_passes >= 1".into()));
        }
        if let Some(k) = &m.svm.kernel {
            k.validate().map_err(|e| invalid(format!("svm.kernel: {e}")))?;
        }
        if m.forest.n_trees < 1 {
            return Err(invalid("forest.n_trees must be at least 1".into()));
        }
        if m.forest.mtry == Some(0) {
            return Err(invalid("forest.mtry must be at least 1".into()));
        }
        let g = &m.gbdt;
        if g.rounds < 1 {
            return Err(invalid("gbdt.rounds must be at least 1".into()));
        }
        if !(g.learning_rate > 0.0 && g.learning_rate <= 1.0) {
            return Err(invalid(format!("gbdt.learning_rate must lie in (0, 1], got {}", g.learning_rate)));
        }
        if g.loss != Loss::MulticlassLogloss {
            return Err(invalid("classification runs need gbdt.loss = multiclass_logloss".into()));
        }
        if !(g.a > 0.0 && g.a <= 1.0) || !(0.0..=1.0).contains(&g.b) {
            return Err(invalid("gbdt.a must lie in (0, 1] and gbdt.b in [0, 1]".into()));
        }
        Ok(())
    }

    /// Hash of the fields that determine the prepared files.
    pub fn preparation_hash(&self) -> Result<String> {
        let key = serde_json::json!({
            "input": self.input,
            "schema": self.schema,
            "target": self.target,
            "split": self.split,
            "imputation": self.imputation,
            "features": self.features,
        });
        Ok(sha256_hex(serde_json::to_string(&key)?.as_bytes()))
    }

    /// Hash of the whole configuration.
    pub fn hash(&self) -> Result<String> {
        Ok(sha256_hex(serde_json::to_string(self)?.as_bytes()))
    }

    /// Seed of the configured model family.
    pub fn model_seed(&self) -> u64 {
        match self.model.algorithm {
            Algorithm::Logistic => self.model.logistic.seed,
            Algorithm::Svm => self.model.svm.seed,
            Algorithm::RandomForest => self.model.forest.seed,
            _ => self.model.gbdt.seed,
        }
    }

    pub fn prepared_dir(&self) -> PathBuf {
        self.output_dir.join(format!("prepared_{}", self.target.tag()))
    }

    pub fn model_stem(&self) -> String {
        format!("{}_{}", self.model.algorithm.tag(), self.target.tag())
    }

    pub fn artifact_path(&self) -> PathBuf {
        self.output_dir.join("models").join(format!("{}.json", self.model_stem()))
    }

    /// Per-row forest margins on the training split.
    pub fn margins_path(&self) -> PathBuf {
        self.output_dir.join("models").join(format!("{}_margins.csv", self.model_stem()))
    }

    pub fn evaluation_path(&self) -> PathBuf {
        self.output_dir.join("evaluations").join(format!("{}.json", self.model_stem()))
    }
}

pub(crate) fn digest(bytes: &[u8]) -> String {
    sha256_hex(bytes)
}
