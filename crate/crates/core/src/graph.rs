//! Structural graph over subspaces.
//!
//! Two locators are siblings when they filter the same dimensions and differ
//! in exactly one value; they are parent and child when the child adds exactly
//! one filter to the parent's filters.

use std::collections::{BTreeMap, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::insight::{Insight, InsightCatalog};
use crate::table::{Locator, Subspace};

pub const GRAPH_SCHEMA: &str = "iw-graph/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Endpoint {
    First,
    Second,
}

impl Endpoint {
    fn flip(self) -> Self {
        match self {
            Endpoint::First => Endpoint::Second,
            Endpoint::Second => Endpoint::First,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "relation", rename_all = "snake_case")]
pub enum RelationKind {
    Sibling,
    /// `parent` names the endpoint with the shorter locator.
    ParentChild { parent: Endpoint },
}

impl RelationKind {
    /// The same relation seen from the other endpoint.
    pub fn reversed(self) -> Self {
        match self {
            RelationKind::Sibling => RelationKind::Sibling,
            RelationKind::ParentChild { parent } => RelationKind::ParentChild { parent: parent.flip() },
        }
    }
}

pub fn relation_of(a: &Locator, b: &Locator) -> Option<RelationKind> {
    if a.len() == b.len() {
        if !a.dims().eq(b.dims()) {
            return None;
        }
        let differing = a.iter().zip(b.iter()).filter(|(x, y)| x.1 != y.1).count();
        return (differing == 1).then_some(RelationKind::Sibling);
    }
    let (short, long, parent) = if a.len() + 1 == b.len() {
        (a, b, Endpoint::First)
    } else if b.len() + 1 == a.len() {
        (b, a, Endpoint::Second)
    } else {
        return None;
    };
    short
        .iter()
        .all(|(d, v)| long.get(d) == Some(v))
        .then_some(RelationKind::ParentChild { parent })
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GraphEdge {
    pub a: String,
    pub b: String,
    #[serde(flatten)]
    pub relation: RelationKind,
}

/// Nodes keyed by canonical locator text. Parent-child edges are stored
/// parent first; sibling edges with the smaller key first.
#[derive(Debug, Clone, Default)]
pub struct SubspaceGraph {
    nodes: Vec<Locator>,
    keys: Vec<String>,
    index: HashMap<String, usize>,
    edges: Vec<GraphEdge>,
    adjacency: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct GraphDump {
    schema: String,
    nodes: Vec<String>,
    edges: Vec<GraphEdge>,
}

pub fn build_graph(subspaces: &[Subspace]) -> SubspaceGraph {
    SubspaceGraph::from_locators(subspaces.iter().map(|s| s.locator.clone()))
}

impl SubspaceGraph {
    pub fn from_locators(locators: impl IntoIterator<Item = Locator>) -> Self {
        let mut nodes: Vec<Locator> = locators.into_iter().collect();
        nodes.sort();
        nodes.dedup();
        let keys: Vec<String> = nodes.iter().map(Locator::canonical).collect();
        let index: HashMap<String, usize> = keys.iter().cloned().enumerate().map(|(i, k)| (k, i)).collect();

        let mut pairs: Vec<(usize, usize, RelationKind)> = Vec::new();
        let mut sibling_groups: BTreeMap<(String, String), Vec<usize>> = BTreeMap::new();
        for (i, loc) in nodes.iter().enumerate() {
            for dim in loc.dims() {
                let parent = loc.without(dim);
                let key = parent.canonical();
                if let Some(&p) = index.get(&key) {
                    pairs.push((p, i, RelationKind::ParentChild { parent: Endpoint::First }));
                }
                sibling_groups.entry((key, dim.to_owned())).or_default().push(i);
            }
        }
        for members in sibling_groups.values() {
            for (x, &i) in members.iter().enumerate() {
                for &j in &members[x + 1..] {
                    let (a, b) = if keys[i] < keys[j] { (i, j) } else { (j, i) };
                    pairs.push((a, b, RelationKind::Sibling));
                }
            }
        }

        let mut adjacency = vec![Vec::new(); nodes.len()];
        let mut edges: Vec<GraphEdge> = pairs
            .into_iter()
            .map(|(a, b, relation)| {
                adjacency[a].push(b);
                adjacency[b].push(a);
                GraphEdge {
                    a: keys[a].clone(),
                    b: keys[b].clone(),
                    relation,
                }
            })
            .collect();
        edges.sort();
        edges.dedup();
        for adj in &mut adjacency {
            adj.sort_unstable();
            adj.dedup();
        }
        SubspaceGraph {
            nodes,
            keys,
            index,
            edges,
            adjacency,
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[Locator] {
        &self.nodes
    }

    pub fn edges(&self) -> &[GraphEdge] {
        &self.edges
    }

    pub fn contains(&self, loc: &Locator) -> bool {
        self.index.contains_key(&loc.canonical())
    }

    pub fn neighbors(&self, loc: &Locator) -> Vec<&Locator> {
        self.index
            .get(&loc.canonical())
            .map(|&i| self.adjacency[i].iter().map(|&j| &self.nodes[j]).collect())
            .unwrap_or_default()
    }

    /// Canonical keys of every node within `step` hops of `origin`, the
    /// origin included, in breadth-first order.
    pub fn within(&self, origin: &Locator, step: usize) -> Result<Vec<&str>> {
        let start = *self
            .index
            .get(&origin.canonical())
            .ok_or_else(|| Error::Lookup(format!("subspace {origin} is not in the graph")))?;
        let mut dist = vec![usize::MAX; self.nodes.len()];
        dist[start] = 0;
        let mut queue = VecDeque::from([start]);
        let mut reached = vec![start];
        while let Some(u) = queue.pop_front() {
            if dist[u] == step {
                continue;
            }
            for &v in &self.adjacency[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    reached.push(v);
                    queue.push_back(v);
                }
            }
        }
        Ok(reached.into_iter().map(|i| self.keys[i].as_str()).collect())
    }

    pub fn to_json(&self, pretty: bool) -> String {
        let dump = GraphDump {
            schema: GRAPH_SCHEMA.to_owned(),
            nodes: self.keys.clone(),
            edges: self.edges.clone(),
        };
        if pretty {
            serde_json::to_string_pretty(&dump).expect("graph serializes")
        } else {
            serde_json::to_string(&dump).expect("graph serializes")
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let dump: GraphDump = serde_json::from_str(text)?;
        if dump.schema != GRAPH_SCHEMA {
            return Err(Error::Lookup(format!("unexpected graph schema {:?}", dump.schema)));
        }
        let locs = dump
            .nodes
            .iter()
            .map(|k| Locator::parse_canonical(k))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_locators(locs))
    }
}

/// Insights reached by structural filtering around a focused insight.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    /// Score descending, id ascending.
    pub insights: Vec<Insight>,
    pub origin: String,
    pub step: usize,
}

impl CandidateSet {
    pub fn ids(&self) -> Vec<&str> {
        self.insights.iter().map(|i| i.id.as_str()).collect()
    }

    /// Keeps the `cap` best-scoring candidates.
    pub fn capped(mut self, cap: usize) -> Self {
        self.insights.truncate(cap);
        self
    }
}

/// Breadth-first expansion from the focused insight's subspace up to `step`
/// hops. Subspaces without insights still count as hops.
pub fn structural_filter(
    catalog: &InsightCatalog,
    graph: &SubspaceGraph,
    focused_id: &str,
    step: usize,
) -> Result<CandidateSet> {
    let focused = catalog
        .get(focused_id)
        .ok_or_else(|| Error::Lookup(format!("insight {focused_id} is not in the catalog")))?;
    let step = step.max(1);
    let mut insights: Vec<Insight> = graph
        .within(&focused.ae.locator, step)?
        .into_iter()
        .flat_map(|key| catalog.in_subspace_canonical(key))
        .filter(|i| i.id != focused.id)
        .cloned()
        .collect();
    insights.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.id.cmp(&b.id)));
    Ok(CandidateSet {
        insights,
        origin: focused.id.clone(),
        step,
    })
}
