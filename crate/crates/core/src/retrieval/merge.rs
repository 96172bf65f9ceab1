use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::index::{RankedItem, RankedList, VectorIndex};
use crate::error::{Error, Result};
use crate::insight::{Category, ExtractionConfig, InsightType};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MergeConfig {
    pub alpha: f64,
    /// Retrieval depth per path.
    pub k: usize,
    /// Final candidate count.
    #[serde(rename = "K")]
    pub top_k: usize,
    /// Absolute score floor; `None` uses each type's extraction floor.
    pub min_score: Option<f64>,
    /// Maximum entries per (category, type) pair.
    pub diversity: usize,
}

impl Default for MergeConfig {
    fn default() -> Self {
        MergeConfig {
            alpha: 0.7,
            k: 20,
            top_k: 10,
            min_score: None,
            diversity: 3,
        }
    }
}

impl MergeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Config(format!("alpha {} is outside [0, 1]", self.alpha)));
        }
        if self.k == 0 || self.top_k == 0 || self.diversity == 0 {
            return Err(Error::Config("k, K and diversity must be positive".into()));
        }
        if self.top_k > 2 * self.k {
            return Err(Error::Config(format!("K = {} exceeds 2k = {}", self.top_k, 2 * self.k)));
        }
        Ok(())
    }
}

/// Linear rank score of a 0-based position in a list of depth `k`.
pub fn rank_score(position: Option<usize>, k: usize) -> f64 {
    match position {
        Some(p) if p < k => (k - p) as f64 / k as f64,
        _ => 0.0,
    }
}

/// Weighted rank fusion of the user-query path and the context path.
pub fn dual_path_merge(c_user: &RankedList, c_context: &RankedList, cfg: &MergeConfig) -> RankedList {
    let mut scores: BTreeMap<&str, f64> = BTreeMap::new();
    for (pos, item) in c_user.items.iter().enumerate() {
        *scores.entry(&item.id).or_default() += cfg.alpha * rank_score(Some(pos), cfg.k);
    }
    for (pos, item) in c_context.items.iter().enumerate() {
        *scores.entry(&item.id).or_default() += (1.0 - cfg.alpha) * rank_score(Some(pos), cfg.k);
    }
    let mut merged = RankedList {
        items: scores
            .into_iter()
            .map(|(id, score)| RankedItem {
                id: id.to_owned(),
                score,
            })
            .collect(),
        k: 2 * cfg.k,
    };
    merged.sort();
    merged
}

/// Ordered ids surviving the metadata constraints.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateSubset {
    pub ids: Vec<String>,
}

/// Score floor, per-(category, type) cap and truncation to K, preserving
/// merged order. Ids missing from the index are skipped.
pub fn apply_constraints(
    merged: &RankedList,
    index: &VectorIndex,
    cfg: &MergeConfig,
    extraction: &ExtractionConfig,
) -> Result<CandidateSubset> {
    let mut per_group: HashMap<(Category, InsightType), usize> = HashMap::new();
    let mut ids = Vec::new();
    for item in &merged.items {
        if ids.len() == cfg.top_k {
            break;
        }
        let Some(entry) = index.get(&item.id) else {
            continue;
        };
        let meta = &entry.meta;
        let floor = cfg.min_score.unwrap_or_else(|| extraction.score_floor(meta.itype));
        if meta.score < floor {
            continue;
        }
        let count = per_group.entry((meta.category, meta.itype)).or_default();
        if *count == cfg.diversity {
            continue;
        }
        *count += 1;
        ids.push(item.id.clone());
    }
    if ids.is_empty() {
        return Err(Error::EmptySubset);
    }
    Ok(CandidateSubset { ids })
}
