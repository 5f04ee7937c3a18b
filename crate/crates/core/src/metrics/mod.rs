//! Confusion matrices, per-class metrics, ROC analysis and report tables.

mod classification;
mod confusion;
mod report;
mod roc;

pub use classification::{class_metrics, ClassMetrics, PerClass};
pub use confusion::{confusion_matrix, ConfusionMatrix};
pub use report::{render_report, sanitize, write_report, EvaluationReport, RenderedFile, ReportFormat};
pub use roc::{multiclass_roc, roc_curve, RocCurve};
