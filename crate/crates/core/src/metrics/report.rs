use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::classification::{class_metrics, ClassMetrics};
use super::confusion::{confusion_matrix, ConfusionMatrix};
use super::roc::{multiclass_roc, RocCurve};
use crate::error::{Error, Result};
use crate::tabular::format_number;

/// Evaluation of one model on one task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub algorithm: String,
    pub task: String,
    pub classes: Vec<String>,
    pub rows: u64,
    pub accuracy: f64,
    pub metrics: ClassMetrics<f64>,
    pub confusion: ConfusionMatrix,
    /// Per-class one-vs-rest curve; `None` where the class is absent.
    pub roc: Vec<Option<RocCurve<f64>>>,
    /// Identifies the model and configuration that produced the report.
    pub fingerprint: String,
}

impl EvaluationReport {
    pub fn build(
        algorithm: &str,
        task: &str,
        classes: &[String],
        y_true: &[usize],
        y_pred: &[usize],
        scores: &[Vec<f64>],
        fingerprint: &str,
    ) -> Result<Self> {
        let k = classes.len();
        let confusion = confusion_matrix(y_true, y_pred, k)?.with_labels(classes.to_vec())?;
        if confusion.total() == 0 {
            return Err(Error::Evaluation("no rows to evaluate".into()));
        }
        let metrics = class_metrics(&confusion)?;
        let roc = multiclass_roc(y_true, scores, k)?;
        Ok(Self {
            algorithm: algorithm.to_string(),
            task: task.to_string(),
            classes: classes.to_vec(),
            rows: confusion.total(),
            accuracy: metrics.accuracy,
            metrics,
            confusion,
            roc,
            fingerprint: fingerprint.to_string(),
        })
    }

    fn check_consistent(&self) -> Result<()> {
        let k = self.classes.len();
        let labels_ok = self.confusion.labels == self.classes
            && self.metrics.per_class.len() == k
            && self.metrics.per_class.iter().zip(&self.classes).all(|(p, c)| &p.label == c)
            && self.roc.len() == k;
        if labels_ok {
            Ok(())
        } else {
            Err(Error::Aggregation(format!("report {}/{} has inconsistent class lists", self.algorithm, self.task)))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Markdown,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedFile {
    pub name: String,
    pub contents: String,
}

/// File-name-safe form of a label: ASCII alphanumerics, `-` and `_` kept,
/// everything else replaced with `_`.
pub fn sanitize(label: &str) -> String {
    label.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

struct Layout<'a> {
    algorithms: Vec<&'a str>,
    tasks: Vec<&'a str>,
}

impl<'a> Layout<'a> {
    fn of(reports: &'a [EvaluationReport]) -> Result<Self> {
        if reports.is_empty() {
            return Err(Error::Aggregation("no reports to render".into()));
        }
        let mut algorithms: Vec<&str> = Vec::new();
        let mut tasks: Vec<&str> = Vec::new();
        for (i, r) in reports.iter().enumerate() {
            r.check_consistent()?;
            for other in &reports[..i] {
                if other.algorithm == r.algorithm && other.task == r.task {
                    return Err(Error::Aggregation(format!(
                        "duplicate report for algorithm `{}` on task `{}`",
                        r.algorithm, r.task
                    )));
                }
                if other.task == r.task && other.classes != r.classes {
                    return Err(Error::Aggregation(format!("conflicting class lists for task `{}`", r.task)));
                }
            }
            if !algorithms.contains(&r.algorithm.as_str()) {
                algorithms.push(&r.algorithm);
            }
            if !tasks.contains(&r.task.as_str()) {
                tasks.push(&r.task);
            }
        }
        Ok(Self { algorithms, tasks })
    }
}

fn find<'a>(reports: &'a [EvaluationReport], algorithm: &str, task: &str) -> Option<&'a EvaluationReport> {
    reports.iter().find(|r| r.algorithm == algorithm && r.task == task)
}

/// Renders the comparison tables: overall accuracy (algorithms x tasks)
/// and per-task precision/recall/F1/AUC tables.
pub fn render_report(reports: &[EvaluationReport], format: ReportFormat) -> Result<Vec<RenderedFile>> {
    let layout = Layout::of(reports)?;
    Ok(match format {
        ReportFormat::Markdown => {
            vec![RenderedFile { name: "report.md".into(), contents: render_markdown(reports, &layout) }]
        }
        ReportFormat::Csv => render_csv(reports, &layout),
    })
}

/// Renders both formats into `dir` and returns the written paths.
pub fn write_report(reports: &[EvaluationReport], dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for format in [ReportFormat::Markdown, ReportFormat::Csv] {
        for file in render_report(reports, format)? {
            let path = dir.join(&file.name);
            std::fs::write(&path, &file.contents).map_err(|e| Error::io(&path, e))?;
            written.push(path);
        }
    }
    Ok(written)
}

fn md_escape(s: &str) -> String {
    s.replace('|', "\\|")
}

fn metric_rows(r: &EvaluationReport, metric: Metric) -> Vec<Option<f64>> {
    let mut row: Vec<Option<f64>> = match metric {
        Metric::Precision => r.metrics.per_class.iter().map(|p| Some(p.precision)).collect(),
        Metric::Recall => r.metrics.per_class.iter().map(|p| Some(p.recall)).collect(),
        Metric::F1 => r.metrics.per_class.iter().map(|p| Some(p.f1)).collect(),
        Metric::Auc => r.roc.iter().map(|c| c.as_ref().map(|c| c.auc)).collect(),
    };
    let defined: Vec<f64> = row.iter().flatten().copied().collect();
    let mean = match metric {
        Metric::Precision => Some(r.metrics.macro_precision),
        Metric::Recall => Some(r.metrics.macro_recall),
        Metric::F1 => Some(r.metrics.macro_f1),
        Metric::Auc if defined.is_empty() => None,
        Metric::Auc => Some(defined.iter().sum::<f64>() / defined.len() as f64),
    };
    row.push(mean);
    row
}

#[derive(Clone, Copy)]
enum Metric {
    Precision,
    Recall,
    F1,
    Auc,
}

impl Metric {
    const ALL: [Metric; 4] = [Metric::Precision, Metric::Recall, Metric::F1, Metric::Auc];

    fn title(self) -> &'static str {
        match self {
            Metric::Precision => "Precision",
            Metric::Recall => "Recall",
            Metric::F1 => "F1-score",
            Metric::Auc => "AUC",
        }
    }
}

/// Table body with the column maxima bolded when more than one row competes.
fn md_table(out: &mut String, header: &[String], rows: &[(String, Vec<Option<f64>>)]) {
    let _ = writeln!(out, "| {} |", header.join(" | "));
    let _ = writeln!(out, "|{}", "---|".repeat(header.len()));
    let ncols = header.len() - 1;
    let best: Vec<Option<f64>> = (0..ncols)
        .map(|c| {
            rows.iter()
                .filter_map(|(_, v)| v[c])
                .map(|v| (v * 100.0).round() / 100.0)
                .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))))
        })
        .collect();
    for (name, values) in rows {
        let cells: Vec<String> = values
            .iter()
            .enumerate()
            .map(|(c, v)| match v {
                None => "-".to_string(),
                Some(v) => {
                    let text = format!("{v:.2}");
                    let rounded = (v * 100.0).round() / 100.0;
                    if rows.len() > 1 && best[c] == Some(rounded) {
                        format!("**{text}**")
                    } else {
                        text
                    }
                }
            })
            .collect();
        let _ = writeln!(out, "| {} | {} |", md_escape(name), cells.join(" | "));
    }
    out.push('\n');
}

fn render_markdown(reports: &[EvaluationReport], layout: &Layout) -> String {
    let mut out = String::from("# Evaluation Report\n\n## Overall Accuracy\n\n");
    let mut header = vec!["Algorithm".to_string()];
    header.extend(layout.tasks.iter().map(|t| md_escape(t)));
    let rows: Vec<(String, Vec<Option<f64>>)> = layout
        .algorithms
        .iter()
        .map(|a| {
            let cells = layout.tasks.iter().map(|t| find(reports, a, t).map(|r| r.accuracy)).collect();
            (a.to_string(), cells)
        })
        .collect();
    md_table(&mut out, &header, &rows);

    for task in &layout.tasks {
        let in_task: Vec<&EvaluationReport> = reports.iter().filter(|r| r.task == *task).collect();
        let classes = &in_task[0].classes;
        for metric in Metric::ALL {
            let _ = writeln!(out, "## {} of {} Classes\n", metric.title(), md_escape(task));
            let mut header = vec!["Algorithm".to_string()];
            header.extend(classes.iter().map(|c| md_escape(c)));
            header.push("Macro avg".into());
            let rows: Vec<(String, Vec<Option<f64>>)> =
                in_task.iter().map(|r| (r.algorithm.clone(), metric_rows(r, metric))).collect();
            md_table(&mut out, &header, &rows);
        }
        for r in &in_task {
            let _ = writeln!(out, "## Confusion Matrix: {} on {}\n", md_escape(&r.algorithm), md_escape(task));
            let mut header = vec!["True \\ Predicted".to_string()];
            header.extend(classes.iter().map(|c| md_escape(c)));
            let _ = writeln!(out, "| {} |", header.join(" | "));
            let _ = writeln!(out, "|{}", "---|".repeat(header.len()));
            for (c, row) in r.confusion.counts.iter().enumerate() {
                let cells: Vec<String> = row.iter().map(u64::to_string).collect();
                let _ = writeln!(out, "| {} | {} |", md_escape(&classes[c]), cells.join(" | "));
            }
            out.push('\n');
        }
    }
    out
}

fn opt_number(v: Option<f64>) -> String {
    v.map(format_number).unwrap_or_default()
}

fn render_csv(reports: &[EvaluationReport], layout: &Layout) -> Vec<RenderedFile> {
    let mut files = Vec::new();
    let mut overall = String::from("algorithm,task,accuracy\n");
    for a in &layout.algorithms {
        for t in &layout.tasks {
            if let Some(r) = find(reports, a, t) {
                let _ = writeln!(overall, "{},{},{}", csv_field(a), csv_field(t), format_number(r.accuracy));
            }
        }
    }
    files.push(RenderedFile { name: "overall_accuracy.csv".into(), contents: overall });

    for task in &layout.tasks {
        let mut text = String::from("algorithm,class,precision,recall,f1,support,auc\n");
        for r in reports.iter().filter(|r| r.task == *task) {
            for (c, p) in r.metrics.per_class.iter().enumerate() {
                let _ = writeln!(
                    text,
                    "{},{},{},{},{},{},{}",
                    csv_field(&r.algorithm),
                    csv_field(&p.label),
                    format_number(p.precision),
                    format_number(p.recall),
                    format_number(p.f1),
                    p.support(),
                    opt_number(r.roc[c].as_ref().map(|c| c.auc)),
                );
            }
            let auc = metric_rows(r, Metric::Auc).pop().flatten();
            let _ = writeln!(
                text,
                "{},macro_avg,{},{},{},{},{}",
                csv_field(&r.algorithm),
                format_number(r.metrics.macro_precision),
                format_number(r.metrics.macro_recall),
                format_number(r.metrics.macro_f1),
                r.rows,
                opt_number(auc),
            );
        }
        files.push(RenderedFile { name: format!("metrics_{}.csv", sanitize(task)), contents: text });
    }

    for r in reports {
        for (c, curve) in r.roc.iter().enumerate() {
            let Some(curve) = curve else { continue };
            let mut text = String::from("fpr,tpr\n");
            for (x, y) in &curve.points {
                let _ = writeln!(text, "{},{}", format_number(*x), format_number(*y));
            }
            files.push(RenderedFile {
                name: format!("roc_{}_{}.csv", sanitize(&r.algorithm), sanitize(&r.classes[c])),
                contents: text,
            });
        }
    }
    files
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(algorithm: &str, task: &str, classes: &[&str], flip: usize) -> EvaluationReport {
        let classes: Vec<String> = classes.iter().map(|s| s.to_string()).collect();
        let k = classes.len();
        let y: Vec<usize> = (0..30).map(|i| i % k).collect();
        let pred: Vec<usize> = y.iter().enumerate().map(|(i, &c)| if i < flip { (c + 1) % k } else { c }).collect();
        let scores: Vec<Vec<f64>> = pred
            .iter()
            .enumerate()
            .map(|(i, &p)| (0..k).map(|c| if c == p { 0.6 + (i as f64) * 0.01 } else { 0.1 }).collect())
            .collect();
        EvaluationReport::build(algorithm, task, &classes, &y, &pred, &scores, "fp").unwrap()
    }

    #[test]
    fn two_by_two_accuracy_grid() {
        let reports = vec![
            report("svm", "genetic_disorder", &["a", "b", "c"], 3),
            report("svm", "disorder_subclass", &["x", "y"], 5),
            report("gbdt_oblivious", "genetic_disorder", &["a", "b", "c"], 1),
            report("gbdt_oblivious", "disorder_subclass", &["x", "y"], 0),
        ];
        let files = render_report(&reports, ReportFormat::Csv).unwrap();
        let overall = &files[0];
        assert_eq!(overall.name, "overall_accuracy.csv");
        assert_eq!(overall.contents.lines().count(), 5);
        let md = &render_report(&reports, ReportFormat::Markdown).unwrap()[0].contents;
        assert!(md.contains("| Algorithm | genetic_disorder | disorder_subclass |"));
        assert!(md.contains("| gbdt_oblivious | **0.97** | **1.00** |"));
    }

    #[test]
    fn single_report_has_one_row_tables() {
        let reports = vec![report("rf", "t", &["a", "b"], 2)];
        let md = &render_report(&reports, ReportFormat::Markdown).unwrap()[0].contents;
        assert!(md.contains("| rf | 0.93 |"));
        assert!(!md.contains("**"));
        let files = render_report(&reports, ReportFormat::Csv).unwrap();
        let names: Vec<&str> = files.iter().map(|f| f.name.as_str()).collect();
        assert_eq!(names, ["overall_accuracy.csv", "metrics_t.csv", "roc_rf_a.csv", "roc_rf_b.csv"]);
    }

    #[test]
    fn conflicting_or_duplicate_reports() {
        let a = report("rf", "t", &["a", "b"], 0);
        let b = report("svm", "t", &["a", "c"], 0);
        assert!(matches!(render_report(&[a.clone(), b], ReportFormat::Csv), Err(Error::Aggregation(_))));
        assert!(matches!(render_report(&[a.clone(), a], ReportFormat::Csv), Err(Error::Aggregation(_))));
        assert!(render_report(&[], ReportFormat::Markdown).is_err());
    }

    #[test]
    fn sanitized_names() {
        assert_eq!(sanitize("Leber's hereditary optic neuropathy"), "Leber_s_hereditary_optic_neuropathy");
    }

    #[test]
    fn empty_evaluation_is_rejected() {
        let classes = vec!["a".to_string()];
        assert!(matches!(EvaluationReport::build("m", "t", &classes, &[], &[], &[], "fp"), Err(Error::Evaluation(_))));
    }
}
