use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Insight, InsightType};
use crate::error::{Error, Result};
use crate::table::Locator;

pub const CATALOG_SCHEMA: &str = "iw-catalog/1";

/// Counters collected during extraction.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub subspaces: usize,
    pub analysis_entities: usize,
    pub compound_pairs: usize,
    /// Sub-series pairs whose breakdown labels did not line up.
    pub alignment_skips: usize,
    /// Detections dropped because impact weighting pushed them under the
    /// type's score floor.
    pub below_floor: usize,
}

impl Diagnostics {
    pub(crate) fn absorb(&mut self, other: &Diagnostics) {
        self.analysis_entities += other.analysis_entities;
        self.compound_pairs += other.compound_pairs;
        self.alignment_skips += other.alignment_skips;
        self.below_floor += other.below_floor;
    }
}

/// Insights sorted by id, indexed by subspace and by type.
#[derive(Debug, Clone, Default)]
pub struct InsightCatalog {
    insights: Vec<Insight>,
    by_id: HashMap<String, usize>,
    by_locator: BTreeMap<String, Vec<usize>>,
    by_type: BTreeMap<InsightType, Vec<usize>>,
    diagnostics: Diagnostics,
}

#[derive(Serialize)]
struct LineOut<'a> {
    schema: &'a str,
    #[serde(flatten)]
    insight: &'a Insight,
}

#[derive(Deserialize)]
struct LineIn {
    schema: String,
    #[serde(flatten)]
    insight: Insight,
}

impl InsightCatalog {
    pub fn new(mut insights: Vec<Insight>, diagnostics: Diagnostics) -> Result<Self> {
        insights.sort_by(|a, b| a.id.cmp(&b.id));
        if let Some(w) = insights.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(Error::Lookup(format!("duplicate insight id {}", w[0].id)));
        }
        let mut by_id = HashMap::with_capacity(insights.len());
        let mut by_locator: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        let mut by_type: BTreeMap<InsightType, Vec<usize>> = BTreeMap::new();
        for (i, ins) in insights.iter().enumerate() {
            by_id.insert(ins.id.clone(), i);
            by_locator.entry(ins.ae.locator.canonical()).or_default().push(i);
            by_type.entry(ins.itype).or_default().push(i);
        }
        Ok(InsightCatalog {
            insights,
            by_id,
            by_locator,
            by_type,
            diagnostics,
        })
    }

    pub fn len(&self) -> usize {
        self.insights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.insights.is_empty()
    }

    pub fn insights(&self) -> &[Insight] {
        &self.insights
    }

    pub fn get(&self, id: &str) -> Option<&Insight> {
        self.by_id.get(id).map(|&i| &self.insights[i])
    }

    pub fn contains(&self, id: &str) -> bool {
        self.by_id.contains_key(id)
    }

    /// Insights housed in the subspace of `loc`, in id order.
    pub fn in_subspace(&self, loc: &Locator) -> Vec<&Insight> {
        self.in_subspace_canonical(&loc.canonical())
    }

    pub fn in_subspace_canonical(&self, canonical: &str) -> Vec<&Insight> {
        self.by_locator
            .get(canonical)
            .map(|ix| ix.iter().map(|&i| &self.insights[i]).collect())
            .unwrap_or_default()
    }

    pub fn of_type(&self, itype: InsightType) -> Vec<&Insight> {
        self.by_type
            .get(&itype)
            .map(|ix| ix.iter().map(|&i| &self.insights[i]).collect())
            .unwrap_or_default()
    }

    pub fn type_counts(&self) -> BTreeMap<InsightType, usize> {
        self.by_type.iter().map(|(t, ix)| (*t, ix.len())).collect()
    }

    pub fn diagnostics(&self) -> &Diagnostics {
        &self.diagnostics
    }

    /// One JSON object per line, each tagged with [`CATALOG_SCHEMA`].
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for ins in &self.insights {
            let line = serde_json::to_string(&LineOut {
                schema: CATALOG_SCHEMA,
                insight: ins,
            })
            .expect("insight serializes");
            out.push_str(&line);
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut insights = Vec::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let parsed: LineIn = serde_json::from_str(line)?;
            if parsed.schema != CATALOG_SCHEMA {
                return Err(Error::Lookup(format!(
                    "line {}: schema {:?}, expected {CATALOG_SCHEMA:?}",
                    n + 1,
                    parsed.schema
                )));
            }
            insights.push(parsed.insight);
        }
        Self::new(insights, Diagnostics::default())
    }

    /// SHA-256 over the JSON-lines export.
    pub fn content_hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_jsonl().as_bytes()))
    }
}
