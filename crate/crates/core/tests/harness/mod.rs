//! Randomized drivers and direct oracles shared by the integration tests
//! and the acceptance suite.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use iw_core::graph::{structural_filter, SubspaceGraph};
use iw_core::insight::InsightCatalog;
use iw_core::reasoner::{Chosen, Recommendation};
use iw_core::retrieval::{dual_path_merge, MergeConfig, RankedItem, RankedList};
use iw_core::story::{NodeId, StateOp, Story};
use iw_core::{Error, StoryError};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Candidate ids at `step` must all appear at `step + 1`.
pub fn check_bfs(catalog: &InsightCatalog, graph: &SubspaceGraph, seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let focused = catalog
        .insights()
        .choose(&mut rng)
        .ok_or("empty catalog")?
        .id
        .clone();
    let step = rng.random_range(1..=4);
    let ids = |s: usize| -> Result<BTreeSet<String>, String> {
        Ok(structural_filter(catalog, graph, &focused, s)
            .map_err(|e| e.to_string())?
            .ids()
            .into_iter()
            .map(str::to_owned)
            .collect())
    };
    let (small, large) = (ids(step)?, ids(step + 1)?);
    match small.difference(&large).next() {
        Some(lost) => Err(format!("seed {seed}: {lost} reachable at step {step} but not at {}", step + 1)),
        None => Ok(()),
    }
}

#[derive(Debug, Default, Clone, Copy)]
pub struct MutationStats {
    pub operations: usize,
    pub cycle_attempts: usize,
}

fn rec(ids: &[&str]) -> Recommendation {
    Recommendation {
        chosen: ids
            .iter()
            .map(|id| Chosen {
                insight_id: (*id).to_owned(),
                relation_text: "related".into(),
                vote_count: 1,
            })
            .collect(),
        samples_used: 1,
        fallback: false,
    }
}

/// Applies a random sequence of valid mutations, plus deliberate
/// cycle-creating moves, checking the forest invariant after each step.
pub fn story_mutations(catalog: &InsightCatalog, seed: u64, length: usize) -> Result<MutationStats, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ids: Vec<&str> = catalog.insights().iter().map(|i| i.id.as_str()).collect();
    let mut story = Story::new("fuzz", "fuzz");
    let seeds: Vec<String> = ids.choose_multiple(&mut rng, 3).map(|s| (*s).to_owned()).collect();
    story.seed(&seeds, catalog);
    let mut stats = MutationStats::default();

    for _ in 0..length {
        let nodes: Vec<NodeId> = story.nodes().map(|n| n.id).collect();
        let free: Vec<&str> = (0..8)
            .map(|_| *ids.choose(&mut rng).unwrap())
            .filter(|i| !story.contains_insight(i))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let op = rng.random_range(0..6);
        stats.operations += 1;
        let result = match (op, nodes.as_slice()) {
            (_, []) => {
                let pick: Vec<String> = free.choose_multiple(&mut rng, 2).map(|s| (*s).to_owned()).collect();
                story.seed(&pick, catalog);
                Ok(())
            }
            (0, _) => {
                let focus = *nodes.choose(&mut rng).unwrap();
                let n = rng.random_range(0..=3);
                let mut picks: Vec<&str> = free.choose_multiple(&mut rng, n).copied().collect();
                if rng.random_bool(0.2) {
                    if let Some(existing) = story.nodes().next() {
                        picks.push(catalog.get(&existing.insight_id).unwrap().id.as_str());
                    }
                }
                story.add_recommendations(focus, "q", &rec(&picks), catalog).map(|_| ())
            }
            (1, _) => match free.choose(&mut rng) {
                Some(id) => story.user_add_node(*nodes.choose(&mut rng).unwrap(), id, catalog).map(|_| ()),
                None => Ok(()),
            },
            (2, _) => {
                let node = *nodes.choose(&mut rng).unwrap();
                let sub: BTreeSet<NodeId> = story.subtree(node).into_iter().collect();
                let outside: Vec<NodeId> = nodes.iter().copied().filter(|n| !sub.contains(n)).collect();
                match outside.choose(&mut rng) {
                    Some(p) => story.move_node(node, *p),
                    None => Ok(()),
                }
            }
            (3, _) => {
                let node = *nodes.choose(&mut rng).unwrap();
                let sub = story.subtree(node);
                let target = *sub.choose(&mut rng).unwrap();
                stats.cycle_attempts += 1;
                let before = story.export();
                match story.move_node(node, target) {
                    Err(Error::Story(StoryError::Cycle { .. })) if story.export() == before => Ok(()),
                    Err(Error::Story(StoryError::Cycle { .. })) => {
                        return Err(format!("seed {seed}: rejected move still changed the story"))
                    }
                    other => {
                        return Err(format!("seed {seed}: moving {node} under {target} gave {other:?}"));
                    }
                }
            }
            (4, _) if rng.random_bool(0.3) => story.delete_node(*nodes.choose(&mut rng).unwrap()).map(|_| ()),
            _ => {
                let ops = [StateOp::Pin, StateOp::Unpin, StateOp::Collapse, StateOp::Expand, StateOp::Focus];
                story.set_state(*nodes.choose(&mut rng).unwrap(), *ops.choose(&mut rng).unwrap())
            }
        };
        result.map_err(|e| format!("seed {seed}: valid mutation failed: {e}"))?;
        story.check_invariants().map_err(|e| format!("seed {seed}: {e}"))?;
        check_forest(&story).map_err(|e| format!("seed {seed}: {e}"))?;
    }
    Ok(stats)
}

/// Independent check: every node reaches a parentless node by following
/// parents without revisiting, and no node has two incoming edges.
pub fn check_forest(story: &Story) -> Result<(), String> {
    let mut incoming: BTreeMap<NodeId, usize> = BTreeMap::new();
    for e in story.edges() {
        *incoming.entry(e.to).or_default() += 1;
    }
    if let Some((n, c)) = incoming.iter().find(|(_, c)| **c > 1) {
        return Err(format!("node {n} has {c} parents"));
    }
    let parent: BTreeMap<NodeId, NodeId> = story.edges().map(|e| (e.to, e.from)).collect();
    for n in story.nodes() {
        let mut seen = BTreeSet::new();
        let mut cur = n.id;
        while let Some(p) = parent.get(&cur) {
            if !seen.insert(cur) {
                return Err(format!("cycle through node {}", n.id));
            }
            cur = *p;
        }
    }
    Ok(())
}

/// Majority rule evaluated directly: `(candidate number, votes)` of the
/// expected picks and whether the fallback applies.
pub fn tally_oracle(samples: &[Vec<usize>], m: usize) -> (Vec<(usize, usize)>, bool) {
    let mut votes: BTreeMap<usize, usize> = BTreeMap::new();
    for s in samples {
        let distinct: BTreeSet<usize> = s.iter().copied().collect();
        for c in distinct {
            *votes.entry(c).or_default() += 1;
        }
    }
    let need = m.div_ceil(2);
    let mut passing: Vec<(usize, usize)> = votes.iter().filter(|(_, v)| **v >= need).map(|(c, v)| (*c, *v)).collect();
    passing.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    if passing.is_empty() {
        let best = votes.iter().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)));
        (best.map(|(c, v)| vec![(*c, *v)]).unwrap_or_default(), true)
    } else {
        (passing, false)
    }
}

pub fn ranked(ids: &[String], k: usize) -> RankedList {
    RankedList {
        items: ids
            .iter()
            .enumerate()
            .map(|(i, id)| RankedItem {
                id: id.clone(),
                score: 1.0 - i as f64 / (ids.len() as f64 + 1.0),
            })
            .collect(),
        k,
    }
}

/// Two random lists of distinct ids from a shared pool, each at most `k`.
pub fn random_lists(rng: &mut ChaCha8Rng, k: usize) -> (Vec<String>, Vec<String>) {
    let pool: Vec<String> = (0..rng.random_range(1..=2 * k)).map(|i| format!("x{i:03}")).collect();
    let take = |rng: &mut ChaCha8Rng| {
        let mut p = pool.clone();
        p.shuffle(rng);
        p.truncate(rng.random_range(0..=k.min(p.len())));
        p
    };
    let a = take(rng);
    let b = take(rng);
    (a, b)
}

/// With α = 1 the merge lists the user path first, in its order; with α = 0
/// the same holds for the context path.
pub fn check_alpha_boundaries(seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = rng.random_range(1..=20);
    let (user, context) = random_lists(&mut rng, k);
    for (alpha, path) in [(1.0, &user), (0.0, &context)] {
        let cfg = MergeConfig {
            alpha,
            k,
            ..Default::default()
        };
        let merged = dual_path_merge(&ranked(&user, k), &ranked(&context, k), &cfg);
        let prefix: Vec<&str> = merged.items.iter().take(path.len()).map(|i| i.id.as_str()).collect();
        let expect: Vec<&str> = path.iter().map(String::as_str).collect();
        if prefix != expect {
            return Err(format!("seed {seed}, alpha {alpha}: merged prefix {prefix:?}, expected {expect:?}"));
        }
        let union: BTreeSet<&String> = user.iter().chain(&context).collect();
        if merged.items.len() != union.len() {
            return Err(format!("seed {seed}: merged {} items, union has {}", merged.items.len(), union.len()));
        }
    }
    Ok(())
}
