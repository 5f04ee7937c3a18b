//! Tabular multiclass classification toolkit.
//!
//! The crate covers the whole batch workflow for the genetic-disorder
//! classification problem: schema-driven CSV ingestion and imputation,
//! engineered features, chi-squared feature ranking, five from-scratch
//! classifier families and an evaluation/report suite.
//!
//! - [`tabular`]: dataset model, CSV I/O, imputation, stratified split
//! - [`features`]: engineered features, binning, chi-squared ranking
//! - [`linear`]: one-vs-rest logistic regression and kernel SVM
//! - [`trees`]: CART, random forest with margin diagnostics, gradient boosting
//! - [`metrics`]: confusion matrix, precision/recall/F1, ROC/AUC, reports
//! - [`runner`]: config-driven prepare/train/evaluate/report commands
//! - [`synthetic`]: generator for data shaped like the public dataset
//!
//! Model code is generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the crate root fix the scalar to `f64`, which is what the runner uses.

// `!(x > 0.0)` style checks are deliberate: they reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod features;
pub mod linear;
pub mod matrix;
pub mod metrics;
pub mod runner;
pub mod scalar;
pub mod synthetic;
pub mod tabular;
pub mod trees;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use scalar::Scalar;

pub type LogisticModel64 = linear::LogisticModel<f64>;
pub type SvmModel64 = linear::SvmModel<f64>;
pub type ForestModel64 = trees::ForestModel<f64>;
pub type GbdtModel64 = trees::GbdtModel<f64>;
pub type Tree64 = trees::Tree<f64>;
pub type ClassMetrics64 = metrics::ClassMetrics<f64>;
pub type RocCurve64 = metrics::RocCurve<f64>;
pub type Matrix64 = Matrix<f64>;
