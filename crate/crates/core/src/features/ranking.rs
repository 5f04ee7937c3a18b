use std::collections::BTreeMap;
use std::io::Write;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::binning::{apply_bins, quantile_edges};
use super::chi2::{chi2_statistic, contingency};
use crate::error::{Error, Result};
use crate::tabular::{format_number, Dataset};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub feature: String,
    pub chi2: f64,
}

/// Features ordered by chi-squared statistic, descending, ties by name.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureRanking {
    pub entries: Vec<RankEntry>,
    /// Features whose statistic could not be computed, with the reason.
    pub skipped: Vec<(String, String)>,
    /// Cut points used for each numeric feature.
    pub bin_edges: BTreeMap<String, Vec<f64>>,
}

impl FeatureRanking {
    pub fn from_entries(mut entries: Vec<RankEntry>) -> Self {
        entries.sort_by(|a, b| b.chi2.total_cmp(&a.chi2).then_with(|| a.feature.cmp(&b.feature)));
        Self { entries, ..Self::default() }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.feature.as_str()).collect()
    }

    pub fn position(&self, feature: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.feature == feature)
    }

    /// CSV with header `rank,feature,chi2`; ranks start at 1.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["rank", "feature", "chi2"])?;
        for (i, e) in self.entries.iter().enumerate() {
            wtr.write_record([(i + 1).to_string(), e.feature.clone(), format_number(e.chi2)])?;
        }
        wtr.flush().map_err(|e| Error::io("feature_ranking.csv", e))?;
        Ok(())
    }
}

/// Ranks every feature column against `target`. Numeric features are
/// discretized into `bins` equal-frequency bins first.
pub fn rank_features(ds: &Dataset, target: &str, bins: usize) -> Result<FeatureRanking> {
    if bins < 2 {
        return Err(Error::Argument(format!("bins must be at least 2, got {bins}")));
    }
    let target_col = ds.column(target)?;
    if !target_col.schema().is_discrete() {
        return Err(Error::Type(format!("target `{target}` is not discrete")));
    }
    let features: Vec<String> = ds.feature_names().into_iter().filter(|f| f != target).collect();

    let results: Vec<(String, Result<f64>, Option<Vec<f64>>)> = features
        .par_iter()
        .map(|name| {
            let (stat, edges) = score_feature(ds, name, target, bins);
            (name.clone(), stat, edges)
        })
        .collect();

    let mut entries = Vec::new();
    let mut skipped = Vec::new();
    let mut bin_edges = BTreeMap::new();
    for (name, stat, edges) in results {
        if let Some(e) = edges {
            bin_edges.insert(name.clone(), e);
        }
        match stat {
            Ok(v) => entries.push(RankEntry { feature: name, chi2: v }),
            Err(e) => {
                warn!("feature `{name}` skipped in chi2 ranking: {e}");
                skipped.push((name, e.to_string()));
            }
        }
    }
    let mut ranking = FeatureRanking::from_entries(entries);
    ranking.skipped = skipped;
    ranking.bin_edges = bin_edges;
    Ok(ranking)
}

fn score_feature(ds: &Dataset, name: &str, target: &str, bins: usize) -> (Result<f64>, Option<Vec<f64>>) {
    let column = match ds.column(name) {
        Ok(c) => c,
        Err(e) => return (Err(e), None),
    };
    if column.schema().is_discrete() {
        let stat = contingency(ds, name, target).and_then(|t| chi2_statistic(&t));
        return (stat, None);
    }
    let observed: Vec<f64> = column.cells().iter().flatten().copied().collect();
    let edges = quantile_edges(&observed, bins);
    let stat = apply_bins(column, &edges)
        .and_then(|binned| ds.replace_column(binned))
        .and_then(|d| contingency(&d, name, target))
        .and_then(|t| chi2_statistic(&t));
    (stat, Some(edges))
}

/// First `k` names of the ranking.
pub fn select_top_k(ranking: &FeatureRanking, k: usize) -> Result<Vec<String>> {
    if k == 0 || k > ranking.len() {
        return Err(Error::Argument(format!("k = {k} is outside 1..={}", ranking.len())));
    }
    Ok(ranking.entries[..k].iter().map(|e| e.feature.clone()).collect())
}
