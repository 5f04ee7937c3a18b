use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gdclass_core::runner::ModelArtifact;
use gdclass_core::synthetic::{generate, SyntheticConfig};

fn gdclass(args: &[&str], env_out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_gdclass"));
    cmd.args(args).env_remove("GDCLASS_OUTPUT_DIR").env("RUST_LOG", "warn");
    if let Some(dir) = env_out {
        cmd.env("GDCLASS_OUTPUT_DIR", dir);
    }
    cmd.output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

struct Workspace {
    _tmp: tempfile::TempDir,
    root: PathBuf,
}

impl Workspace {
    fn new(rows: usize) -> Self {
        let tmp = tempfile::tempdir().unwrap();
        let root = tmp.path().to_path_buf();
        let data = generate(&SyntheticConfig { rows, ..SyntheticConfig::default() });
        data.write_csv(root.join("data.csv")).unwrap();
        fs::write(root.join("schema.json"), data.schema.to_json().unwrap()).unwrap();
        Self { _tmp: tmp, root }
    }

    fn config(&self, name: &str, target: &str, algorithm: &str, extra: &str) -> String {
        let text = format!(
            r#"{{
  "input": "data.csv",
  "schema": "schema.json",
  "target": "{target}",
  "features": {{ "top_k": 12 }},
  "model": {{ "algorithm": "{algorithm}", "gbdt": {{ "rounds": 20 }}, "forest": {{ "n_trees": 10 }} }},
  "output_dir": "out"{extra}
}}"#
        );
        let path = self.root.join(name);
        fs::write(&path, text).unwrap();
        path.to_string_lossy().into_owned()
    }

    fn out(&self) -> PathBuf {
        self.root.join("out")
    }
}

fn ok(o: Output) -> Output {
    assert_eq!(code(&o), 0, "stderr: {}", stderr(&o));
    o
}

#[test]
fn full_flow_and_byte_identical_rerun() {
    let ws = Workspace::new(600);
    let cfg = ws.config("goss.json", "genetic_disorder", "gbdt_goss", "");
    ok(gdclass(&["prepare", "--config", &cfg], None));
    let prepared = ws.out().join("prepared_genetic_disorder");
    let snapshot = |dir: &Path| -> Vec<(String, Vec<u8>)> {
        let mut files: Vec<_> = fs::read_dir(dir)
            .unwrap()
            .map(|e| e.unwrap().path())
            .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
            .collect();
        files.sort();
        files
    };
    let first = snapshot(&prepared);
    assert_eq!(first.len(), 5);
    ok(gdclass(&["prepare", "--config", &cfg], None));
    assert_eq!(first, snapshot(&prepared));

    ok(gdclass(&["train", "--config", &cfg], None));
    let artifact = ModelArtifact::load(ws.out().join("models/gbdt_goss_genetic_disorder.json")).unwrap();
    assert_eq!(artifact.classes.len(), 3);

    let eval = ok(gdclass(&["evaluate", "--config", &cfg], None));
    assert!(String::from_utf8_lossy(&eval.stdout).contains("accuracy"));
    ok(gdclass(&["report", "--config", &cfg], None));
    let md = fs::read_to_string(ws.out().join("report/report.md")).unwrap();
    assert!(md.contains("gbdt_goss"));
    assert!(!ws.out().join(".lock").exists());
}

#[test]
fn svm_on_subclasses_has_nine_subproblems() {
    let ws = Workspace::new(400);
    let cfg = ws.config("svm.json", "disorder_subclass", "svm", "");
    ok(gdclass(&["prepare", "--config", &cfg], None));
    ok(gdclass(&["train", "--config", &cfg], None));
    let artifact = ModelArtifact::load(ws.out().join("models/svm_disorder_subclass.json")).unwrap();
    assert_eq!(artifact.classes.len(), 9);
    assert_eq!(artifact.model.n_outputs(), 9);
}

#[test]
fn invalid_ratio_is_a_validation_error_before_io() {
    let ws = Workspace::new(50);
    let cfg = ws.config("bad.json", "genetic_disorder", "svm", r#", "split": { "ratio": 1.5 }"#);
    fs::remove_file(ws.root.join("data.csv")).unwrap();
    let o = gdclass(&["prepare", "--config", &cfg], None);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("ratio"), "{}", stderr(&o));
    assert!(!ws.out().join("prepared_genetic_disorder").exists());
}

#[test]
fn unknown_algorithm_and_missing_config_are_validation_errors() {
    let ws = Workspace::new(50);
    let cfg = ws.config("bad.json", "genetic_disorder", "knn", "");
    assert_eq!(code(&gdclass(&["train", "--config", &cfg], None)), 1);
    assert_eq!(code(&gdclass(&["train"], None)), 1);
    assert_eq!(code(&gdclass(&["no-such-command"], None)), 1);
}

#[test]
fn stale_preparation_is_detected() {
    let ws = Workspace::new(300);
    let cfg = ws.config("rf.json", "genetic_disorder", "random_forest", "");
    ok(gdclass(&["prepare", "--config", &cfg], None));
    let train = ws.out().join("prepared_genetic_disorder/train.csv");
    let mut text = fs::read_to_string(&train).unwrap();
    let row = text.lines().nth(1).unwrap().to_string();
    text.push_str(&row);
    text.push('\n');
    fs::write(&train, text).unwrap();
    let o = gdclass(&["train", "--config", &cfg], None);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("stale"), "{}", stderr(&o));

    // changing a preparation setting also invalidates the files
    ok(gdclass(&["prepare", "--config", &cfg], None));
    let o = gdclass(&["train", "--config", &cfg, "--seed", "9"], None);
    assert_eq!(code(&o), 2);
}

#[test]
fn evaluation_input_errors() {
    let ws = Workspace::new(300);
    let cfg = ws.config("lr.json", "genetic_disorder", "logistic", "");
    ok(gdclass(&["prepare", "--config", &cfg], None));
    ok(gdclass(&["train", "--config", &cfg], None));

    // raw layout evaluates through the stored pipeline
    let raw = ws.root.join("data.csv");
    ok(gdclass(&["evaluate", "--config", &cfg, "--input", raw.to_str().unwrap()], None));

    // drop one raw column
    let text = fs::read_to_string(&raw).unwrap();
    let mut rdr = csv_lines(&text);
    let header = rdr.remove(0);
    let drop = header.iter().position(|h| h == "Maternal gene").unwrap();
    let drifted: String = std::iter::once(header)
        .chain(rdr)
        .map(|mut r| {
            r.remove(drop);
            r.iter().map(|c| quote(c)).collect::<Vec<_>>().join(",") + "\n"
        })
        .collect();
    let drift = ws.root.join("drift.csv");
    fs::write(&drift, drifted).unwrap();
    let o = gdclass(&["evaluate", "--config", &cfg, "--input", drift.to_str().unwrap()], None);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("Maternal gene"), "{}", stderr(&o));

    // header only
    let test = ws.out().join("prepared_genetic_disorder/test.csv");
    let header_only = ws.root.join("empty.csv");
    let first = fs::read_to_string(&test).unwrap().lines().next().unwrap().to_string();
    fs::write(&header_only, first + "\n").unwrap();
    let o = gdclass(&["evaluate", "--config", &cfg, "--input", header_only.to_str().unwrap()], None);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("degenerate"), "{}", stderr(&o));
}

fn csv_lines(text: &str) -> Vec<Vec<String>> {
    // synthetic cells never contain commas, so a plain split is enough
    text.lines().map(|l| l.split(',').map(|c| c.trim_matches('"').to_string()).collect()).collect()
}

fn quote(cell: &str) -> String {
    if cell.contains(',') || cell.contains('"') {
        format!("\"{}\"", cell.replace('"', "\"\""))
    } else {
        cell.to_string()
    }
}

#[test]
fn locked_output_directory_is_refused() {
    let ws = Workspace::new(100);
    let cfg = ws.config("lock.json", "genetic_disorder", "gbdt_plain", "");
    fs::create_dir_all(ws.out()).unwrap();
    fs::write(ws.out().join(".lock"), "").unwrap();
    let o = gdclass(&["prepare", "--config", &cfg], None);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("locked"), "{}", stderr(&o));
}

#[test]
fn output_dir_env_override() {
    let ws = Workspace::new(200);
    let cfg = ws.config("env.json", "genetic_disorder", "gbdt_plain", "");
    let elsewhere = ws.root.join("elsewhere");
    ok(gdclass(&["prepare", "--config", &cfg], Some(&elsewhere)));
    assert!(elsewhere.join("prepared_genetic_disorder/pipeline.json").exists());
    assert!(!ws.out().exists());
}

#[test]
fn duplicate_reports_fail_aggregation() {
    let ws = Workspace::new(300);
    let cfg = ws.config("dup.json", "genetic_disorder", "gbdt_plain", "");
    ok(gdclass(&["prepare", "--config", &cfg], None));
    ok(gdclass(&["train", "--config", &cfg], None));
    ok(gdclass(&["evaluate", "--config", &cfg], None));
    let eval = ws.out().join("evaluations/gbdt_plain_genetic_disorder.json");
    let e = eval.to_str().unwrap();
    let out = ws.root.join("merged");
    let o = gdclass(&["report", e, e, "--out", out.to_str().unwrap()], None);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("aggregation"), "{}", stderr(&o));
    ok(gdclass(&["report", e, "--out", out.to_str().unwrap()], None));
    assert!(out.join("overall_accuracy.csv").exists());
}
