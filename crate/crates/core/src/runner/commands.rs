use std::fs::{self, OpenOptions};
use std::path::{Path, PathBuf};

use log::{info, warn};

use super::artifact::{FittedModel, ModelArtifact, FORMAT_VERSION};
use super::config::{digest, Algorithm, RunConfig};
use super::pipeline::{DesignSpec, FeaturePipeline};
use crate::error::{Error, Result};
use crate::linear::{LogisticModel, SvmModel};
use crate::metrics::{render_report, write_report, EvaluationReport, ReportFormat};
use crate::tabular::{load_csv, read_header, stratified_split, write_csv, ColumnSchema, Dataset, Role, Schema};
use crate::trees::{forest_diagnostics, ForestModel, GbdtModel, Variant};

pub const TRAIN_FILE: &str = "train.csv";
pub const TEST_FILE: &str = "test.csv";
pub const PIPELINE_FILE: &str = "pipeline.json";
pub const PREPARED_SCHEMA_FILE: &str = "prepared_schema.json";
pub const RANKING_FILE: &str = "feature_ranking.csv";
const LOCK_FILE: &str = ".lock";

/// Exclusive claim on an output directory, released on drop.
#[derive(Debug)]
pub struct DirLock {
    path: PathBuf,
}

impl DirLock {
    pub fn acquire(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(Self { path }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(Error::Locked(dir.to_path_buf())),
            Err(e) => Err(Error::io(&path, e)),
        }
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn fingerprint(cfg: &RunConfig, train: &[u8], test: &[u8]) -> Result<String> {
    let joined = format!("{}:{}:{}", cfg.preparation_hash()?, digest(train), digest(test));
    Ok(digest(joined.as_bytes()))
}

/// What `prepare` wrote.
#[derive(Debug, Clone, PartialEq)]
pub struct PrepareOutcome {
    pub dir: PathBuf,
    pub train_rows: usize,
    pub test_rows: usize,
    pub dropped_rows: usize,
    pub selected: Vec<String>,
}

/// Ingests, splits, imputes, engineers and selects; writes the prepared
/// CSV files, the ranking and the pipeline record.
pub fn prepare(cfg: &RunConfig) -> Result<PrepareOutcome> {
    cfg.validate()?;
    let _lock = DirLock::acquire(&cfg.output_dir)?;
    let schema = Schema::load(&cfg.schema)?;
    let ingest = load_csv(&cfg.input, &schema.columns)?;
    let raw = ingest.dataset;
    let total = raw.n_rows();
    let target = raw.target(cfg.target.role())?.name().to_string();
    let target_col = raw.column(&target)?;
    let labeled: Vec<usize> = (0..total).filter(|&r| target_col.get(r).is_some()).collect();
    if labeled.len() < total {
        warn!("dropping {} row(s) without a `{target}` label", total - labeled.len());
    }
    let raw = raw.select_rows(&labeled);
    let split = stratified_split(&raw, cfg.split.ratio, cfg.split.seed, &target)?;
    let (mut pipeline, train, test) = FeaturePipeline::fit(cfg, &raw, &split)?;

    let dir = cfg.prepared_dir();
    let mut train_bytes = Vec::new();
    write_csv(&train, &mut train_bytes)?;
    let mut test_bytes = Vec::new();
    write_csv(&test, &mut test_bytes)?;
    pipeline.fingerprint = fingerprint(cfg, &train_bytes, &test_bytes)?;
    let mut ranking_bytes = Vec::new();
    pipeline.ranking.write_csv(&mut ranking_bytes)?;

    write_file(&dir.join(TRAIN_FILE), &train_bytes)?;
    write_file(&dir.join(TEST_FILE), &test_bytes)?;
    write_file(&dir.join(RANKING_FILE), &ranking_bytes)?;
    write_file(&dir.join(PREPARED_SCHEMA_FILE), serde_json::to_string_pretty(&pipeline.prepared_schema)?)?;
    write_file(&dir.join(PIPELINE_FILE), serde_json::to_string_pretty(&pipeline)?)?;
    info!("prepared {} train and {} test rows in {}", train.n_rows(), test.n_rows(), dir.display());
    Ok(PrepareOutcome {
        dir,
        train_rows: train.n_rows(),
        test_rows: test.n_rows(),
        dropped_rows: total - train.n_rows() - test.n_rows(),
        selected: pipeline.selected.clone(),
    })
}

/// Loads the pipeline record and checks it still matches the prepared
/// files and the preparation settings of `cfg`.
pub fn load_prepared(cfg: &RunConfig) -> Result<(FeaturePipeline, Dataset)> {
    let dir = cfg.prepared_dir();
    let pipeline_path = dir.join(PIPELINE_FILE);
    if !pipeline_path.exists() {
        return Err(Error::StalePreparation(format!("{} not found; run `prepare` first", pipeline_path.display())));
    }
    let pipeline: FeaturePipeline = serde_json::from_slice(&read_file(&pipeline_path)?)?;
    let train_bytes = read_file(&dir.join(TRAIN_FILE))?;
    let test_bytes = read_file(&dir.join(TEST_FILE))?;
    if fingerprint(cfg, &train_bytes, &test_bytes)? != pipeline.fingerprint {
        return Err(Error::StalePreparation(format!(
            "prepared files in {} do not match the configuration; rerun `prepare`",
            dir.display()
        )));
    }
    let train = load_csv(dir.join(TRAIN_FILE), &pipeline.prepared_schema)?.dataset;
    Ok((pipeline, train))
}

/// Fits `algorithm` on a design matrix.
pub fn fit_model(cfg: &RunConfig, x: &crate::Matrix<f64>, labels: &[usize], k: usize) -> Result<FittedModel> {
    let m = &cfg.model;
    Ok(match m.algorithm {
        Algorithm::Logistic => FittedModel::Logistic(LogisticModel::fit(x, labels, k, &m.logistic)?),
        Algorithm::Svm => FittedModel::Svm(SvmModel::fit(x, labels, k, &m.svm)?),
        Algorithm::RandomForest => FittedModel::Forest(ForestModel::fit(x, labels, k, &m.forest)?),
        Algorithm::GbdtPlain | Algorithm::GbdtGoss | Algorithm::GbdtOblivious => {
            let variant = match m.algorithm {
                Algorithm::GbdtGoss => Variant::Goss,
                Algorithm::GbdtOblivious => Variant::Oblivious,
                _ => Variant::Plain,
            };
            let gcfg = crate::trees::GbdtConfig { variant, ..m.gbdt.clone() };
            FittedModel::Gbdt(GbdtModel::fit_classifier(x, labels, k, &gcfg)?)
        }
    })
}

/// Fits the configured model on the prepared training split and saves the
/// artifact.
pub fn train(cfg: &RunConfig) -> Result<ModelArtifact> {
    cfg.validate()?;
    let _lock = DirLock::acquire(&cfg.output_dir)?;
    let (pipeline, train) = load_prepared(cfg)?;
    let design = DesignSpec::new(&pipeline.prepared_schema, cfg.model.algorithm.is_linear());
    let x = design.matrix(&train)?;
    let labels = pipeline.labels(&train)?;
    let k = pipeline.classes.len();
    let model = fit_model(cfg, &x, &labels, k)?;
    let correct =
        (0..x.rows()).map(|i| model.predict(x.row(i)).map(|p| usize::from(p == labels[i]))).sum::<Result<usize>>()?;
    let train_accuracy = correct as f64 / x.rows() as f64;
    match &model {
        FittedModel::Logistic(m) => info!("final one-vs-rest training losses: {:?}", m.final_loss),
        FittedModel::Gbdt(m) => info!("final training loss: {}", m.loss_history.last().copied().unwrap_or(f64::NAN)),
        FittedModel::Svm(m) => {
            let unconverged = m.subproblems.iter().filter(|s| !s.converged).count();
            if unconverged > 0 {
                warn!("{unconverged} SVM subproblem(s) hit the iteration cap");
            }
        }
        FittedModel::Forest(m) => match forest_diagnostics(m, &x, &labels) {
            Ok(d) => {
                info!("forest diagnostics on the training rows: {}", d.summary());
                let mut csv = Vec::new();
                d.write_margins_csv(&mut csv)?;
                write_file(&cfg.margins_path(), csv)?;
            }
            Err(Error::Undefined(why)) => warn!("no forest diagnostics: {why}"),
            Err(e) => return Err(e),
        },
    }
    info!("{} on {}: training accuracy {train_accuracy:.4}", cfg.model.algorithm, cfg.target.tag());
    let artifact = ModelArtifact {
        format_version: FORMAT_VERSION,
        algorithm: cfg.model.algorithm,
        classes: pipeline.classes.clone(),
        pipeline,
        design,
        model,
        config_hash: cfg.hash()?,
        seed: cfg.model_seed(),
        train_accuracy,
    };
    artifact.save(cfg.artifact_path())?;
    Ok(artifact)
}

/// Loads evaluation rows from either a prepared file or a raw file in the
/// original layout; a missing column is reported by name.
pub fn load_evaluation_rows(artifact: &ModelArtifact, path: &Path) -> Result<Dataset> {
    let header = read_header(path)?;
    let pipeline = &artifact.pipeline;
    let has = |n: &str| header.iter().any(|h| h == n);
    let prepared: Vec<&str> = pipeline.prepared_schema.iter().map(|c| c.name.as_str()).collect();
    let missing = |required: Vec<&str>| -> Result<()> {
        match required.into_iter().find(|n| !has(n)) {
            Some(n) => Err(Error::Evaluation(format!("input is missing column `{n}`"))),
            None => Ok(()),
        }
    };
    let rows = if header.iter().all(|h| prepared.contains(&h.as_str())) {
        missing(prepared.clone())?;
        load_csv(path, &pipeline.prepared_schema).map(|ing| ing.dataset)
    } else {
        missing(pipeline.raw_schema.iter().map(|c| c.name.as_str()).collect())?;
        // extra raw columns (identifiers, the other target) are read past
        let mut schema = pipeline.raw_schema.clone();
        let extra: Vec<&String> = header.iter().filter(|h| !schema.iter().any(|c| &c.name == *h)).collect();
        for h in extra {
            schema.push(ColumnSchema::categorical(h.clone(), Vec::<String>::new()).with_role(Role::Ignore));
        }
        load_csv(path, &schema).and_then(|ing| pipeline.apply_raw(&ing.dataset))
    };
    match rows {
        Ok(ds) if ds.n_rows() == 0 => Err(Error::Evaluation("degenerate report: no labeled rows".into())),
        Err(Error::EmptyInput(what)) => Err(Error::Evaluation(format!("degenerate report: {what} has no rows"))),
        other => other,
    }
}

/// Scores `rows` with the artifact.
pub fn evaluate_dataset(artifact: &ModelArtifact, rows: &Dataset) -> Result<EvaluationReport> {
    let x = artifact.design.matrix(rows)?;
    let y_true = artifact.pipeline.labels(rows)?;
    let mut y_pred = Vec::with_capacity(x.rows());
    let mut scores = Vec::with_capacity(x.rows());
    for row in x.iter_rows() {
        y_pred.push(artifact.model.predict(row)?);
        scores.push(artifact.model.scores(row)?);
    }
    EvaluationReport::build(
        artifact.algorithm.tag(),
        artifact.pipeline.target.title(),
        &artifact.classes,
        &y_true,
        &y_pred,
        &scores,
        &artifact.config_hash,
    )
}

/// Evaluates the configured artifact on `input` (default: the prepared
/// test split) and writes the evaluation record plus its report files.
pub fn evaluate(cfg: &RunConfig, input: Option<&Path>) -> Result<EvaluationReport> {
    cfg.validate()?;
    let _lock = DirLock::acquire(&cfg.output_dir)?;
    let artifact = ModelArtifact::load(cfg.artifact_path())?;
    let default_input = cfg.prepared_dir().join(TEST_FILE);
    let path = input.unwrap_or(&default_input);
    let rows = load_evaluation_rows(&artifact, path)?;
    let report = evaluate_dataset(&artifact, &rows)?;
    info!("{} on {}: accuracy {:.4} over {} rows", report.algorithm, report.task, report.accuracy, report.rows);
    write_file(&cfg.evaluation_path(), serde_json::to_string_pretty(&report)?)?;
    write_report(std::slice::from_ref(&report), &cfg.output_dir.join("reports").join(cfg.model_stem()))?;
    Ok(report)
}

/// Merges evaluation records into comparison tables under `out_dir`.
pub fn report(inputs: &[PathBuf], out_dir: &Path) -> Result<Vec<PathBuf>> {
    if inputs.is_empty() {
        return Err(Error::Aggregation("no evaluation files given".into()));
    }
    let _lock = DirLock::acquire(out_dir)?;
    let reports = inputs
        .iter()
        .map(|p| -> Result<EvaluationReport> { Ok(serde_json::from_slice(&read_file(p)?)?) })
        .collect::<Result<Vec<_>>>()?;
    // validate before touching the directory
    render_report(&reports, ReportFormat::Markdown)?;
    write_report(&reports, out_dir)
}

/// Every `*.json` file in the evaluations folder of `output_dir`, sorted.
pub fn evaluation_files(output_dir: &Path) -> Result<Vec<PathBuf>> {
    let dir = output_dir.join("evaluations");
    let entries = fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    Ok(files)
}
