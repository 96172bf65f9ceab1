//! The insight tree a user builds during a session.
//!
//! Nodes sit on layers by depth; depth-0 nodes are the seeded first layer
//! and have no parent. Every other node has exactly one incoming edge, so
//! the edges always form a forest.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, StoryError};
use crate::graph::{relation_of, RelationKind};
use crate::insight::InsightCatalog;
use crate::reasoner::Recommendation;

pub const STORY_SCHEMA: &str = "iw-story/1";

pub type NodeId = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeState {
    Collapsed,
    Expanded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AddedBy {
    System,
    User,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoryNode {
    pub id: NodeId,
    pub insight_id: String,
    pub depth: usize,
    pub state: NodeState,
    pub pinned: bool,
    pub focused: bool,
    pub added_by: AddedBy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    StructuralParentChild,
    StructuralSibling,
    /// Recommended by reasoning without a direct subspace relation.
    Semantic,
    UserAdded,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoryEdge {
    pub from: NodeId,
    pub to: NodeId,
    pub kind: EdgeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relation_text: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryLogEntry {
    pub query: String,
    /// `None` for the seeding entry.
    pub focused: Option<NodeId>,
    pub recommended: Vec<NodeId>,
    /// Set once any referenced node has been deleted.
    pub orphaned: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateOp {
    Pin,
    Unpin,
    Collapse,
    Expand,
    Focus,
}

/// One hop of a node's exploration path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryStep {
    pub node: NodeId,
    pub insight_id: String,
    pub query: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Story {
    pub session_id: String,
    pub catalog_hash: String,
    nodes: BTreeMap<NodeId, StoryNode>,
    /// Keyed by the child node.
    edges: BTreeMap<NodeId, StoryEdge>,
    log: Vec<QueryLogEntry>,
    next_id: NodeId,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StoryDoc {
    schema: String,
    session_id: String,
    catalog_hash: String,
    next_id: NodeId,
    nodes: Vec<StoryNode>,
    edges: Vec<StoryEdge>,
    query_log: Vec<QueryLogEntry>,
}

fn not_found(id: NodeId) -> Error {
    StoryError::NodeNotFound(id).into()
}

impl Story {
    pub fn new(session_id: impl Into<String>, catalog_hash: impl Into<String>) -> Self {
        Story {
            session_id: session_id.into(),
            catalog_hash: catalog_hash.into(),
            next_id: 1,
            ..Default::default()
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> impl Iterator<Item = &StoryNode> {
        self.nodes.values()
    }

    pub fn edges(&self) -> impl Iterator<Item = &StoryEdge> {
        self.edges.values()
    }

    pub fn node(&self, id: NodeId) -> Option<&StoryNode> {
        self.nodes.get(&id)
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.edges.get(&id).map(|e| e.from)
    }

    pub fn edge_to(&self, id: NodeId) -> Option<&StoryEdge> {
        self.edges.get(&id)
    }

    pub fn children(&self, id: NodeId) -> Vec<NodeId> {
        self.edges.values().filter(|e| e.from == id).map(|e| e.to).collect()
    }

    pub fn query_log(&self) -> &[QueryLogEntry] {
        &self.log
    }

    pub fn focused(&self) -> Option<NodeId> {
        self.nodes.values().find(|n| n.focused).map(|n| n.id)
    }

    pub fn contains_insight(&self, insight_id: &str) -> bool {
        self.nodes.values().any(|n| n.insight_id == insight_id)
    }

    pub fn node_for_insight(&self, insight_id: &str) -> Option<NodeId> {
        self.nodes.values().find(|n| n.insight_id == insight_id).map(|n| n.id)
    }

    fn push_node(&mut self, insight_id: &str, depth: usize, added_by: AddedBy) -> NodeId {
        let id = self.next_id;
        self.next_id += 1;
        self.nodes.insert(
            id,
            StoryNode {
                id,
                insight_id: insight_id.to_owned(),
                depth,
                state: NodeState::Collapsed,
                pinned: false,
                focused: false,
                added_by,
            },
        );
        id
    }

    /// Places the first-layer insights at depth 0. Unknown or duplicate ids
    /// are skipped with a note in the seeding log entry.
    pub fn seed(&mut self, insight_ids: &[String], catalog: &InsightCatalog) -> Vec<NodeId> {
        let mut added = Vec::new();
        let mut notes = Vec::new();
        for id in insight_ids {
            if !catalog.contains(id) {
                notes.push(format!("skipped {id}: not in the catalog"));
            } else if self.contains_insight(id) {
                notes.push(format!("skipped {id}: already in the story"));
            } else {
                added.push(self.push_node(id, 0, AddedBy::System));
            }
        }
        self.log.push(QueryLogEntry {
            query: String::new(),
            focused: None,
            recommended: added.clone(),
            orphaned: false,
            notes,
        });
        added
    }

    /// One collapsed child of `focused` per recommended insight. The log is
    /// appended even when nothing is added.
    pub fn add_recommendations(
        &mut self,
        focused: NodeId,
        query: &str,
        rec: &Recommendation,
        catalog: &InsightCatalog,
    ) -> Result<Vec<NodeId>> {
        let parent = self.nodes.get(&focused).ok_or_else(|| not_found(focused))?.clone();
        let parent_loc = catalog.get(&parent.insight_id).map(|i| i.ae.locator.clone());
        let mut added = Vec::new();
        let mut notes = Vec::new();
        for c in &rec.chosen {
            let Some(ins) = catalog.get(&c.insight_id) else {
                notes.push(format!("skipped {}: not in the catalog", c.insight_id));
                continue;
            };
            if self.contains_insight(&c.insight_id) {
                notes.push(format!("skipped {}: already in the story", c.insight_id));
                continue;
            }
            let kind = match parent_loc.as_ref().and_then(|p| relation_of(p, &ins.ae.locator)) {
                Some(RelationKind::Sibling) => EdgeKind::StructuralSibling,
                Some(RelationKind::ParentChild { .. }) => EdgeKind::StructuralParentChild,
                None => EdgeKind::Semantic,
            };
            let id = self.push_node(&c.insight_id, parent.depth + 1, AddedBy::System);
            self.edges.insert(
                id,
                StoryEdge {
                    from: focused,
                    to: id,
                    kind,
                    relation_text: Some(c.relation_text.clone()),
                },
            );
            added.push(id);
        }
        self.log.push(QueryLogEntry {
            query: query.to_owned(),
            focused: Some(focused),
            recommended: added.clone(),
            orphaned: false,
            notes,
        });
        Ok(added)
    }

    pub fn user_add_node(&mut self, parent: NodeId, insight_id: &str, catalog: &InsightCatalog) -> Result<NodeId> {
        let depth = self.nodes.get(&parent).ok_or_else(|| not_found(parent))?.depth;
        if !catalog.contains(insight_id) {
            return Err(StoryError::UnknownInsight(insight_id.to_owned()).into());
        }
        if self.contains_insight(insight_id) {
            return Err(StoryError::DuplicateInsight(insight_id.to_owned()).into());
        }
        let id = self.push_node(insight_id, depth + 1, AddedBy::User);
        self.edges.insert(
            id,
            StoryEdge {
                from: parent,
                to: id,
                kind: EdgeKind::UserAdded,
                relation_text: None,
            },
        );
        Ok(id)
    }

    /// `id` and all of its descendants, `id` first.
    pub fn subtree(&self, id: NodeId) -> Vec<NodeId> {
        let mut children: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
        for e in self.edges.values() {
            children.entry(e.from).or_default().push(e.to);
        }
        let mut out = vec![id];
        let mut i = 0;
        while i < out.len() {
            if let Some(cs) = children.get(&out[i]) {
                out.extend(cs);
            }
            i += 1;
        }
        out
    }

    /// Re-parents `node` with its subtree. The new edge is user-added.
    pub fn move_node(&mut self, node: NodeId, new_parent: NodeId) -> Result<()> {
        if !self.nodes.contains_key(&node) {
            return Err(not_found(node));
        }
        let parent_depth = self.nodes.get(&new_parent).ok_or_else(|| not_found(new_parent))?.depth;
        let sub = self.subtree(node);
        if sub.contains(&new_parent) {
            return Err(StoryError::Cycle {
                node,
                parent: new_parent,
            }
            .into());
        }
        let old_depth = self.nodes[&node].depth;
        let new_depth = parent_depth + 1;
        for id in sub {
            let n = self.nodes.get_mut(&id).expect("subtree node exists");
            n.depth = n.depth + new_depth - old_depth;
        }
        self.edges.insert(
            node,
            StoryEdge {
                from: new_parent,
                to: node,
                kind: EdgeKind::UserAdded,
                relation_text: None,
            },
        );
        Ok(())
    }

    /// Removes `node` and its subtree, returning the removed ids in
    /// ascending order. Log entries that mention them become orphaned.
    pub fn delete_node(&mut self, node: NodeId) -> Result<Vec<NodeId>> {
        if !self.nodes.contains_key(&node) {
            return Err(not_found(node));
        }
        let removed: BTreeSet<NodeId> = self.subtree(node).into_iter().collect();
        for id in &removed {
            self.nodes.remove(id);
            self.edges.remove(id);
        }
        for entry in &mut self.log {
            let hit = entry.focused.is_some_and(|f| removed.contains(&f))
                || entry.recommended.iter().any(|r| removed.contains(r));
            entry.orphaned |= hit;
        }
        Ok(removed.into_iter().collect())
    }

    pub fn set_state(&mut self, node: NodeId, op: StateOp) -> Result<()> {
        if !self.nodes.contains_key(&node) {
            return Err(not_found(node));
        }
        if op == StateOp::Focus {
            for n in self.nodes.values_mut() {
                n.focused = false;
            }
        }
        let n = self.nodes.get_mut(&node).expect("checked above");
        match op {
            StateOp::Pin => n.pinned = true,
            StateOp::Unpin => n.pinned = false,
            StateOp::Collapse => n.state = NodeState::Collapsed,
            StateOp::Expand => n.state = NodeState::Expanded,
            StateOp::Focus => n.focused = true,
        }
        Ok(())
    }

    /// The path from the node's layer-0 ancestor down to the node, each hop
    /// with the query that produced it.
    pub fn history_path(&self, node: NodeId) -> Result<Vec<HistoryStep>> {
        if !self.nodes.contains_key(&node) {
            return Err(not_found(node));
        }
        let mut chain = vec![node];
        while let Some(p) = self.parent(*chain.last().expect("non-empty")) {
            chain.push(p);
        }
        chain.reverse();
        Ok(chain
            .into_iter()
            .map(|id| HistoryStep {
                node: id,
                insight_id: self.nodes[&id].insight_id.clone(),
                query: self
                    .log
                    .iter()
                    .find(|e| e.focused.is_some() && e.recommended.contains(&id))
                    .map(|e| e.query.clone()),
            })
            .collect())
    }

    /// Checks the forest and depth invariants.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let mut focused = 0;
        for n in self.nodes.values() {
            focused += n.focused as usize;
            match self.edges.get(&n.id) {
                None if n.depth != 0 => return Err(format!("node {} has no parent at depth {}", n.id, n.depth)),
                None => {}
                Some(e) => {
                    let p = self
                        .nodes
                        .get(&e.from)
                        .ok_or_else(|| format!("edge {}->{} dangles", e.from, e.to))?;
                    if p.depth + 1 != n.depth {
                        return Err(format!("node {} depth {} under depth {}", n.id, n.depth, p.depth));
                    }
                }
            }
        }
        if focused > 1 {
            return Err(format!("{focused} focused nodes"));
        }
        for (to, e) in &self.edges {
            if *to != e.to || !self.nodes.contains_key(to) {
                return Err(format!("edge {}->{} dangles", e.from, e.to));
            }
        }
        // With one parent per node and depth(child) = depth(parent) + 1
        // along every edge, no cycle can exist.
        Ok(())
    }

    /// Canonical JSON: nodes by id, edges by child id, log in order.
    pub fn export(&self) -> String {
        serde_json::to_string(&self.doc()).expect("story serializes")
    }

    pub fn export_pretty(&self) -> String {
        serde_json::to_string_pretty(&self.doc()).expect("story serializes")
    }

    fn doc(&self) -> StoryDoc {
        StoryDoc {
            schema: STORY_SCHEMA.to_owned(),
            session_id: self.session_id.clone(),
            catalog_hash: self.catalog_hash.clone(),
            next_id: self.next_id,
            nodes: self.nodes.values().cloned().collect(),
            edges: self.edges.values().cloned().collect(),
            query_log: self.log.clone(),
        }
    }

    pub fn import(text: &str) -> Result<Self> {
        let bad = |m: String| Error::from(StoryError::Import(m));
        let doc: StoryDoc = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
        if doc.schema != STORY_SCHEMA {
            return Err(bad(format!("schema {:?}, expected {STORY_SCHEMA:?}", doc.schema)));
        }
        let mut story = Story::new(doc.session_id, doc.catalog_hash);
        story.next_id = doc.next_id;
        for n in doc.nodes {
            if n.id >= story.next_id {
                return Err(bad(format!("node id {} is not below next_id {}", n.id, story.next_id)));
            }
            if story.nodes.insert(n.id, n).is_some() {
                return Err(bad("duplicate node id".into()));
            }
        }
        let mut insights = BTreeSet::new();
        if let Some(n) = story.nodes.values().find(|n| !insights.insert(n.insight_id.as_str())) {
            return Err(bad(format!("insight {} appears twice", n.insight_id)));
        }
        for e in doc.edges {
            if !story.nodes.contains_key(&e.from) || !story.nodes.contains_key(&e.to) {
                return Err(bad(format!("edge {}->{} references a missing node", e.from, e.to)));
            }
            if story.edges.insert(e.to, e).is_some() {
                return Err(bad("node with two parents".into()));
            }
        }
        story.log = doc.query_log;
        story.check_invariants().map_err(bad)?;
        Ok(story)
    }

    /// Fails if any node refers to an insight outside `catalog`.
    pub fn check_closure(&self, catalog: &InsightCatalog) -> Result<()> {
        match self.nodes.values().find(|n| !catalog.contains(&n.insight_id)) {
            Some(n) => Err(StoryError::UnknownInsight(n.insight_id.clone()).into()),
            None => Ok(()),
        }
    }
}
