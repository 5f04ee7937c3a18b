//! Engineered features and chi-squared feature ranking.

mod binning;
mod chi2;
mod engineer;
mod ranking;

pub use binning::{assign_bin, bin_continuous, quantile_edges, Binned};
pub use chi2::{chi2_statistic, contingency, ContingencyTable};
pub use engineer::{
    engineer_features, EngineerConfig, ANY_INHERITED_GENE, ENGINEERED_COLUMNS, HEART_OR_RESPIRATORY_ISSUES,
    HIGH_WBC_COUNT, MATERNAL_AGE_ABOVE_40, NUMBER_OF_SYMPTOMS,
};
pub use ranking::{rank_features, select_top_k, FeatureRanking, RankEntry};
