//! Dataset model, schema-driven CSV ingestion, imputation and splitting.

mod dataset;
mod impute;
mod io;
mod schema;
mod split;
mod stats;

pub use dataset::{Column, Dataset};
pub use impute::{impute_missing, ImputePolicy, Imputer};
pub use io::{format_number, load_csv, read_csv, read_header, save_csv, write_csv, Ingest};
pub use schema::{ColumnKind, ColumnSchema, Role, Schema};
pub use split::{stratified_split, SplitPair};
pub use stats::{column_stats, ColumnStats};
