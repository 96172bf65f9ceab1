//! One exploration session end to end: ingest, extraction, graph,
//! descriptions, embeddings, and the query turn that grows the story.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::config::EngineConfig;
use crate::error::{Error, Result};
use crate::graph::{build_graph, structural_filter, SubspaceGraph};
use crate::insight::{extract_all, Category, Insight, InsightCatalog, InsightType};
use crate::narrator::{describe, InsightDescription, NarrationContext};
use crate::reasoner::{compose_prompt, recommend, HistoryTurn, Recommendation};
use crate::registry::Providers;
use crate::retrieval::{apply_constraints, dual_path_merge, embed, EmbeddingProvider, EntryMeta, RankedList, VectorIndex};
use crate::story::{NodeId, StateOp, Story, StoryEdge, StoryNode};
use crate::table::{enumerate_subspaces, load_table_from_str, Schema, Table};

const EMBED_BATCH: usize = 64;

/// Everything derived from one table and configuration. Immutable once
/// built, so it can be shared between concurrent readers.
pub struct Workspace {
    table: Table,
    catalog: InsightCatalog,
    graph: SubspaceGraph,
    descriptions: HashMap<String, InsightDescription>,
    index: VectorIndex,
    config: EngineConfig,
}

impl Workspace {
    pub fn from_csv(
        csv: &str,
        hints: Option<&Schema>,
        config: &EngineConfig,
        embedder: &dyn EmbeddingProvider,
    ) -> Result<Self> {
        let table = load_table_from_str(csv, hints)?;
        Self::build(table, config, embedder)
    }

    pub fn build(table: Table, config: &EngineConfig, embedder: &dyn EmbeddingProvider) -> Result<Self> {
        config.validate()?;
        let catalog = extract_all(&table, &config.extraction)?;
        let graph = build_graph(&enumerate_subspaces(&table, config.extraction.max_locator_length));
        let ctx = NarrationContext::from_table(&table);
        let descriptions: HashMap<String, InsightDescription> = catalog
            .insights()
            .iter()
            .map(|i| (i.id.clone(), describe(i, &ctx)))
            .collect();

        let mut index = VectorIndex::new(embedder.name(), embedder.dimension());
        for chunk in catalog.insights().chunks(EMBED_BATCH) {
            let texts: Vec<&str> = chunk.iter().map(|i| descriptions[&i.id].text.as_str()).collect();
            let vectors = embedder.embed_batch(&texts)?;
            if vectors.len() != chunk.len() {
                return Err(Error::Provider {
                    provider: embedder.name().to_owned(),
                    message: format!("{} vectors for {} texts", vectors.len(), chunk.len()),
                    retryable: false,
                });
            }
            for (ins, v) in chunk.iter().zip(vectors) {
                index.insert(ins.id.clone(), v, EntryMeta::of(ins))?;
            }
        }
        tracing::info!(
            insights = catalog.len(),
            subspaces = graph.node_count(),
            "workspace built"
        );
        Ok(Workspace {
            table,
            catalog,
            graph,
            descriptions,
            index,
            config: config.clone(),
        })
    }

    pub fn table(&self) -> &Table {
        &self.table
    }

    pub fn catalog(&self) -> &InsightCatalog {
        &self.catalog
    }

    pub fn graph(&self) -> &SubspaceGraph {
        &self.graph
    }

    pub fn index(&self) -> &VectorIndex {
        &self.index
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn description(&self, insight_id: &str) -> Result<&InsightDescription> {
        self.descriptions
            .get(insight_id)
            .ok_or_else(|| Error::Lookup(format!("insight {insight_id} is not in the catalog")))
    }

    /// Descriptions in catalog (id) order.
    pub fn descriptions(&self) -> Vec<&InsightDescription> {
        self.catalog.insights().iter().map(|i| &self.descriptions[&i.id]).collect()
    }

    /// Top insights by score for the first story layer, at most
    /// `diversity` per (category, type).
    pub fn seed_ids(&self) -> Vec<String> {
        let mut all: Vec<&Insight> = self.catalog.insights().iter().collect();
        all.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.id.cmp(&b.id)));
        let mut per: BTreeMap<(Category, InsightType), usize> = BTreeMap::new();
        let mut out = Vec::new();
        for ins in all {
            if out.len() == self.config.reasoner.seed_count {
                break;
            }
            let c = per.entry((ins.category, ins.itype)).or_default();
            if *c < self.config.merge.diversity {
                *c += 1;
                out.push(ins.id.clone());
            }
        }
        out
    }

    /// Structural filter, dual-path retrieval, constraints and reasoning
    /// for one question about `focused_insight`.
    pub fn run_turn(
        &self,
        focused_insight: &str,
        text: &str,
        step: Option<usize>,
        history: &[HistoryTurn],
        providers: &Providers,
    ) -> Result<TurnOutcome> {
        let cfg = &self.config;
        let step = step.unwrap_or(cfg.reasoner.step);
        let structural = structural_filter(&self.catalog, &self.graph, focused_insight, step)?
            .capped(cfg.reasoner.candidate_cap);
        let structural_ids: Vec<&str> = structural.ids();
        if structural_ids.is_empty() {
            return Ok(TurnOutcome {
                structural: 0,
                merged: RankedList::default(),
                candidates: Vec::new(),
                recommendation: Recommendation::structural([], 0),
            });
        }

        let sub = self.index.subset(structural_ids.iter().copied());
        let c_user = if text.trim().is_empty() {
            RankedList {
                items: Vec::new(),
                k: cfg.merge.k,
            }
        } else {
            sub.search(&embed(providers.embedding.as_ref(), text)?, cfg.merge.k)
        };
        let context = self
            .index
            .get(focused_insight)
            .ok_or_else(|| Error::Lookup(format!("insight {focused_insight} has no embedding")))?;
        let c_context = sub.search(&context.vector, cfg.merge.k);
        let merged = dual_path_merge(&c_user, &c_context, &cfg.merge);

        let candidates: Vec<String> = match apply_constraints(&merged, &self.index, &cfg.merge, &cfg.extraction) {
            Ok(subset) => subset.ids,
            Err(Error::EmptySubset) => {
                tracing::info!("metadata constraints removed every candidate; using structural order");
                structural_ids.iter().take(cfg.merge.top_k).map(|s| (*s).to_owned()).collect()
            }
            Err(e) => return Err(e),
        };

        let descs: Vec<InsightDescription> = candidates
            .iter()
            .map(|id| self.description(id).cloned())
            .collect::<Result<_>>()?;
        let bundle = compose_prompt(
            history,
            text,
            self.description(focused_insight)?,
            &descs,
            cfg.reasoner.history_window,
        )?;
        let recommendation = match recommend(providers.lm.as_ref(), &bundle, cfg.reasoner.samples) {
            Ok(r) => r,
            Err(Error::Reasoning(msg)) => {
                tracing::warn!("reasoning failed, falling back to merged ranking: {msg}");
                Recommendation::structural(candidates.iter().map(String::as_str), cfg.merge.top_k)
            }
            Err(e) => return Err(e),
        };
        Ok(TurnOutcome {
            structural: structural_ids.len(),
            merged,
            candidates,
            recommendation,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnOutcome {
    /// Size of the structural candidate set.
    pub structural: usize,
    pub merged: RankedList,
    /// The candidate subset shown to the model, in prompt order.
    pub candidates: Vec<String>,
    pub recommendation: Recommendation,
}

/// A node and its incoming edge, as returned to clients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeView {
    pub node: StoryNode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge: Option<StoryEdge>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryResponse {
    pub recommendation: Recommendation,
    pub nodes: Vec<NodeView>,
}

/// A workspace plus the story built on it.
pub struct Session {
    pub id: String,
    pub workspace: Arc<Workspace>,
    pub story: Story,
}

impl Session {
    /// New session with the first story layer seeded.
    pub fn create(id: impl Into<String>, workspace: Arc<Workspace>) -> Self {
        let id = id.into();
        let mut story = Story::new(id.clone(), workspace.catalog().content_hash());
        let seeds = workspace.seed_ids();
        story.seed(&seeds, workspace.catalog());
        Session { id, workspace, story }
    }

    /// Resumes with an existing story, which must belong to this catalog.
    pub fn resume(id: impl Into<String>, workspace: Arc<Workspace>, story: Story) -> Result<Self> {
        story.check_closure(workspace.catalog())?;
        Ok(Session {
            id: id.into(),
            workspace,
            story,
        })
    }

    pub fn view(&self, node: NodeId) -> Option<NodeView> {
        self.story.node(node).map(|n| NodeView {
            node: n.clone(),
            edge: self.story.edge_to(node).cloned(),
        })
    }

    /// Prior query turns with the descriptions of the insights they added.
    pub fn history(&self) -> Vec<HistoryTurn> {
        self.story
            .query_log()
            .iter()
            .filter(|e| e.focused.is_some())
            .map(|e| HistoryTurn {
                query: e.query.clone(),
                chosen: e
                    .recommended
                    .iter()
                    .filter_map(|n| self.story.node(*n))
                    .filter_map(|n| self.workspace.description(&n.insight_id).ok())
                    .map(|d| d.text.clone())
                    .collect(),
            })
            .collect()
    }

    /// Runs a query turn from `focused_node` and attaches the result to the
    /// story. The focused node becomes the story's focus.
    pub fn query(&mut self, focused_node: NodeId, text: &str, step: Option<usize>, providers: &Providers) -> Result<QueryResponse> {
        let insight = self
            .story
            .node(focused_node)
            .ok_or(crate::error::StoryError::NodeNotFound(focused_node))?
            .insight_id
            .clone();
        let outcome = self
            .workspace
            .run_turn(&insight, text, step, &self.history(), providers)?;
        self.story.set_state(focused_node, StateOp::Focus)?;
        let added = self
            .story
            .add_recommendations(focused_node, text, &outcome.recommendation, self.workspace.catalog())?;
        Ok(QueryResponse {
            recommendation: outcome.recommendation,
            nodes: added.into_iter().filter_map(|n| self.view(n)).collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CSV: &str = "Company,Year,Sales\nA,2019,1\nA,2020,2\nA,2021,3\nA,2022,40\nB,2019,5\nB,2020,5\nB,2021,5\nB,2022,6\nC,2019,1\nC,2020,1\nC,2021,9\nC,2022,1\n";

    fn session() -> (Session, Providers) {
        let cfg = EngineConfig {
            offline: true,
            ..Default::default()
        };
        let p = Providers::stub(64);
        let ws = Workspace::from_csv(CSV, None, &cfg, p.embedding.as_ref()).unwrap();
        (Session::create("t-1", Arc::new(ws)), p)
    }

    #[test]
    fn seeded_and_queryable() {
        let (mut s, p) = session();
        assert!(!s.story.is_empty());
        s.story.check_invariants().unwrap();
        let first = s.story.nodes().next().unwrap().id;
        let resp = s.query(first, "why is this high", None, &p).unwrap();
        for v in &resp.nodes {
            assert_eq!(v.node.depth, 1);
            assert_eq!(v.edge.as_ref().unwrap().from, first);
        }
        assert_eq!(s.story.focused(), Some(first));
        s.story.check_invariants().unwrap();
    }

    #[test]
    fn unknown_node_is_story_error() {
        let (mut s, p) = session();
        assert!(matches!(s.query(999, "q", None, &p), Err(Error::Story(_))));
    }
}
