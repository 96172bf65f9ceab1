use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::embedding::normalize;
use crate::error::{Error, Result};
use crate::insight::{Category, Insight, InsightType};

pub const INDEX_SCHEMA: &str = "iw-index/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryMeta {
    pub itype: InsightType,
    pub category: Category,
    pub score: f64,
    pub locator: String,
}

impl EntryMeta {
    pub fn of(ins: &Insight) -> Self {
        EntryMeta {
            itype: ins.itype,
            category: ins.category,
            score: ins.score,
            locator: ins.ae.locator.canonical(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub id: String,
    pub vector: Vec<f64>,
    pub meta: EntryMeta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedItem {
    pub id: String,
    pub score: f64,
}

/// Items in non-increasing score order, ties by id.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RankedList {
    pub items: Vec<RankedItem>,
    pub k: usize,
}

impl RankedList {
    pub fn ids(&self) -> Vec<&str> {
        self.items.iter().map(|i| i.id.as_str()).collect()
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.items.iter().position(|i| i.id == id)
    }

    pub(crate) fn sort(&mut self) {
        self.items
            .sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.id.cmp(&b.id)));
    }
}

/// Exact cosine index. Vectors are normalized on insert.
#[derive(Debug, Clone, Default)]
pub struct VectorIndex {
    provider: String,
    dimension: usize,
    entries: Vec<IndexEntry>,
    by_id: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct IndexDoc {
    schema: String,
    provider: String,
    dimension: usize,
    metric: String,
    entries: Vec<IndexEntry>,
}

impl VectorIndex {
    pub fn new(provider: impl Into<String>, dimension: usize) -> Self {
        VectorIndex {
            provider: provider.into(),
            dimension,
            entries: Vec::new(),
            by_id: HashMap::new(),
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Inserts or replaces the entry for `id`.
    pub fn insert(&mut self, id: impl Into<String>, mut vector: Vec<f64>, meta: EntryMeta) -> Result<()> {
        if vector.len() != self.dimension {
            return Err(Error::Config(format!(
                "vector of length {} in an index of dimension {}",
                vector.len(),
                self.dimension
            )));
        }
        normalize(&mut vector);
        let id = id.into();
        let entry = IndexEntry {
            id: id.clone(),
            vector,
            meta,
        };
        match self.by_id.get(&id) {
            Some(&i) => self.entries[i] = entry,
            None => {
                self.by_id.insert(id, self.entries.len());
                self.entries.push(entry);
            }
        }
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&IndexEntry> {
        self.by_id.get(id).map(|&i| &self.entries[i])
    }

    /// Copy restricted to `ids`; unknown ids are ignored.
    pub fn subset<'a>(&self, ids: impl IntoIterator<Item = &'a str>) -> VectorIndex {
        let mut out = VectorIndex::new(self.provider.clone(), self.dimension);
        for id in ids {
            if let Some(e) = self.get(id) {
                out.by_id.insert(e.id.clone(), out.entries.len());
                out.entries.push(e.clone());
            }
        }
        out
    }

    /// Exact top-`k` by cosine similarity.
    pub fn search(&self, query: &[f64], k: usize) -> RankedList {
        let norm = query.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut list = RankedList {
            items: self
                .entries
                .iter()
                .map(|e| {
                    let dot: f64 = e.vector.iter().zip(query).map(|(a, b)| a * b).sum();
                    let sim = if norm > 0.0 { (dot / norm).clamp(-1.0, 1.0) } else { 0.0 };
                    RankedItem {
                        id: e.id.clone(),
                        score: sim,
                    }
                })
                .collect(),
            k,
        };
        list.sort();
        list.items.truncate(k);
        list
    }

    pub fn to_json(&self) -> String {
        let mut entries = self.entries.clone();
        entries.sort_by(|a, b| a.id.cmp(&b.id));
        serde_json::to_string(&IndexDoc {
            schema: INDEX_SCHEMA.into(),
            provider: self.provider.clone(),
            dimension: self.dimension,
            metric: "cosine".into(),
            entries,
        })
        .expect("index serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: IndexDoc = serde_json::from_str(text)?;
        if doc.schema != INDEX_SCHEMA {
            return Err(Error::Config(format!("unexpected index schema {:?}", doc.schema)));
        }
        let mut idx = VectorIndex::new(doc.provider, doc.dimension);
        for e in doc.entries {
            idx.insert(e.id, e.vector, e.meta)?;
        }
        Ok(idx)
    }
}
