//! Brute-force reference implementations used to check the library.
//!
//! Everything here works on raw rows of strings and numbers and never calls
//! into the library's lattice, graph or detector code.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use iw_core::table::{ColumnSpec, Schema};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Pairs = Vec<(String, String)>;

#[derive(Debug, Clone)]
pub struct Dim {
    pub name: String,
    pub values: Vec<String>,
    pub ordinal: bool,
}

/// A small table of categorical dimensions and one measure `M`.
#[derive(Debug, Clone)]
pub struct RawTable {
    pub dims: Vec<Dim>,
    pub rows: Vec<(Vec<String>, f64)>,
}

const NOMINAL: [&str; 4] = ["b", "a", "d", "c"];
const ORDINAL: [&str; 4] = ["1", "2", "10", "20"];

pub fn random_table(seed: u64) -> RawTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_dims = rng.random_range(1..=3);
    let ordinal_last = rng.random_bool(0.5);
    let dims: Vec<Dim> = (0..n_dims)
        .map(|i| {
            let card = rng.random_range(1..=4);
            let ordinal = ordinal_last && i == n_dims - 1;
            let pool = if ordinal { &ORDINAL } else { &NOMINAL };
            Dim {
                name: format!("D{i}"),
                values: pool[..card].iter().map(|s| (*s).to_owned()).collect(),
                ordinal,
            }
        })
        .collect();
    let n_rows = rng.random_range(1..=200);
    let style = rng.random_range(0..4);
    let rows = (0..n_rows)
        .map(|_| {
            let vals: Vec<String> = dims
                .iter()
                .map(|d| d.values[rng.random_range(0..d.values.len())].clone())
                .collect();
            let m = match style {
                0 => rng.random_range(0..20) as f64,
                1 => rng.random_range(-5..30) as f64,
                2 => {
                    if rng.random_bool(0.05) {
                        rng.random_range(100..300) as f64
                    } else {
                        rng.random_range(1..5) as f64
                    }
                }
                _ => (rng.random_range(0..400) as f64) / 4.0,
            };
            (vals, m)
        })
        .collect();
    RawTable { dims, rows }
}

impl RawTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for d in &self.dims {
            out.push_str(&d.name);
            out.push(',');
        }
        out.push_str("M\n");
        for (vals, m) in &self.rows {
            for v in vals {
                out.push_str(v);
                out.push(',');
            }
            out.push_str(&format!("{m}\n"));
        }
        out
    }

    pub fn schema(&self) -> Schema {
        let mut columns: Vec<ColumnSpec> = self
            .dims
            .iter()
            .map(|d| {
                let mut c = ColumnSpec::categorical(d.name.clone());
                c.ordinal = d.ordinal;
                c
            })
            .collect();
        columns.push(ColumnSpec::numerical("M"));
        Schema { columns }
    }

    fn dim_index(&self, name: &str) -> usize {
        self.dims.iter().position(|d| d.name == name).unwrap()
    }

    /// Distinct values of a dimension that occur in `rows`, in series order.
    fn labels(&self, dim: usize, rows: &[usize]) -> Vec<String> {
        let present: BTreeSet<&str> = rows.iter().map(|&r| self.rows[r].0[dim].as_str()).collect();
        let mut labels: Vec<String> = present.into_iter().map(str::to_owned).collect();
        if self.dims[dim].ordinal {
            labels.sort_by(|a, b| a.parse::<f64>().unwrap().total_cmp(&b.parse::<f64>().unwrap()));
        }
        labels
    }

    fn series(&self, dim: usize, rows: &[usize]) -> (Vec<String>, Vec<f64>) {
        let labels = self.labels(dim, rows);
        let values = labels
            .iter()
            .map(|l| {
                rows.iter()
                    .filter(|&&r| &self.rows[r].0[dim] == l)
                    .fold(0.0, |acc, &r| acc + self.rows[r].1)
            })
            .collect();
        (labels, values)
    }
}

/// Every non-empty conjunction of filters, with its matching rows.
pub fn lattice(t: &RawTable, max_len: usize) -> BTreeMap<Pairs, Vec<usize>> {
    let n = t.dims.len();
    let mut out = BTreeMap::new();
    for mask in 0u32..(1 << n) {
        let chosen: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        if chosen.len() > max_len {
            continue;
        }
        let mut combos: Vec<Vec<usize>> = vec![vec![]];
        for &d in &chosen {
            combos = combos
                .into_iter()
                .flat_map(|c| {
                    (0..t.dims[d].values.len()).map(move |v| {
                        let mut c = c.clone();
                        c.push(v);
                        c
                    })
                })
                .collect();
        }
        for combo in combos {
            let pairs: Pairs = chosen
                .iter()
                .zip(&combo)
                .map(|(&d, &v)| (t.dims[d].name.clone(), t.dims[d].values[v].clone()))
                .collect();
            let rows: Vec<usize> = (0..t.rows.len())
                .filter(|&r| chosen.iter().zip(&combo).all(|(&d, &v)| t.rows[r].0[d] == t.dims[d].values[v]))
                .collect();
            if !rows.is_empty() {
                let mut sorted = pairs;
                sorted.sort();
                out.insert(sorted, rows);
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum OracleEdge {
    Sibling(Pairs, Pairs),
    /// (parent, child)
    ParentChild(Pairs, Pairs),
}

/// Relations between every pair of nodes, checked pairwise.
pub fn graph_edges(nodes: &[Pairs]) -> BTreeSet<OracleEdge> {
    let mut out = BTreeSet::new();
    for (i, a) in nodes.iter().enumerate() {
        for b in &nodes[i + 1..] {
            let da: Vec<&String> = a.iter().map(|p| &p.0).collect();
            let db: Vec<&String> = b.iter().map(|p| &p.0).collect();
            if da == db {
                let diff = a.iter().zip(b).filter(|(x, y)| x.1 != y.1).count();
                if diff == 1 {
                    let (x, y) = if a < b { (a, b) } else { (b, a) };
                    out.insert(OracleEdge::Sibling(x.clone(), y.clone()));
                }
            } else if a.len() + 1 == b.len() && a.iter().all(|p| b.contains(p)) {
                out.insert(OracleEdge::ParentChild(a.clone(), b.clone()));
            } else if b.len() + 1 == a.len() && b.iter().all(|p| a.contains(p)) {
                out.insert(OracleEdge::ParentChild(b.clone(), a.clone()));
            }
        }
    }
    out
}

/// One expected insight: locator, breakdown, type, highlight key and score.
#[derive(Debug, Clone)]
pub struct Expected {
    pub locator: Pairs,
    pub breakdown: String,
    pub itype: &'static str,
    pub key: String,
    pub score: f64,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn all_equal(v: &[f64]) -> bool {
    v.iter().all(|x| *x == v[0])
}

fn moment(v: &[f64], k: i32) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m).powi(k)).sum::<f64>() / v.len() as f64
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]) / 2.0
    }
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    if all_equal(x) || all_equal(y) {
        return None;
    }
    let (mx, my) = (mean(x), mean(y));
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

fn ranks(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|x| {
            let below = v.iter().filter(|y| *y < x).count() as f64;
            let equal = v.iter().filter(|y| *y == x).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect()
}

fn robust_z(v: &[f64]) -> Option<Vec<f64>> {
    let med = median(v);
    let dev: Vec<f64> = v.iter().map(|x| (x - med).abs()).collect();
    let mad = median(&dev);
    let scale = if mad > 0.0 {
        1.4826 * mad
    } else {
        let m = mean(&dev);
        if m == 0.0 {
            return None;
        }
        1.253314 * m
    };
    Some(v.iter().map(|x| (x - med) / scale).collect())
}

fn first_max(v: &[f64]) -> usize {
    (0..v.len()).fold(0, |b, i| if v[i] > v[b] { i } else { b })
}

fn series_insights(labels: &[String], v: &[f64], ordinal: bool) -> Vec<(&'static str, String, f64)> {
    let n = v.len();
    let mut out = Vec::new();

    if n >= 3 {
        let base: Vec<f64> = if v.iter().any(|x| *x < 0.0) { v.iter().map(|x| x.abs()).collect() } else { v.to_vec() };
        let total: f64 = base.iter().sum();
        if total > 0.0 {
            let i = first_max(&base);
            let share = base[i] / total;
            if share >= 0.5 {
                out.push(("dominance", labels[i].clone(), share));
            } else {
                let mut idx: Vec<usize> = (0..n).collect();
                idx.sort_by(|&a, &b| base[b].total_cmp(&base[a]).then(a.cmp(&b)));
                let s2 = (base[idx[0]] + base[idx[1]]) / total;
                if s2 >= 0.7 {
                    out.push(("top2", format!("{}|{}", labels[idx[0]], labels[idx[1]]), s2));
                }
            }
        }
        if let Some(z) = robust_z(v) {
            let absz: Vec<f64> = z.iter().map(|x| x.abs()).collect();
            let i = first_max(&absz);
            if absz[i] >= 3.0 {
                let dir = if z[i] > 0.0 { "above" } else { "below" };
                out.push(("outlier", format!("{}|{dir}", labels[i]), (absz[i] / 6.0).min(1.0)));
            }
            let neg: Vec<f64> = v.iter().map(|x| -x).collect();
            let j = first_max(&neg);
            let lone = v[j] < 0.0 && v.iter().filter(|x| **x < 0.0).count() == 1;
            if lone || z[j] <= -3.0 {
                out.push(("outstanding_negative", labels[j].clone(), (z[j].abs().max(3.0) / 6.0).min(1.0)));
            }
        }
        if ordinal {
            let pos: Vec<f64> = (0..n).map(|i| i as f64).collect();
            if let Some(r) = pearson(&pos, v) {
                if r.abs() >= 0.7 && r * r >= 0.7 * 0.7 {
                    out.push(("trend", if r > 0.0 { "rising" } else { "falling" }.into(), r * r));
                }
            }
        }
    }
    if n >= 4 && !all_equal(v) {
        let nf = n as f64;
        let g1 = moment(v, 3) / moment(v, 2).powf(1.5) * (nf * (nf - 1.0)).sqrt() / (nf - 2.0);
        if g1.abs() >= 1.0 {
            out.push(("skewness", if g1 > 0.0 { "right" } else { "left" }.into(), (g1.abs() / 3.0).min(1.0)));
        }
        let m2 = moment(v, 2);
        let g2 = (nf - 1.0) / ((nf - 2.0) * (nf - 3.0)) * ((nf + 1.0) * (moment(v, 4) / (m2 * m2) - 3.0) + 6.0);
        if g2 >= 1.0 && g2 / 5.0 >= 0.2 {
            out.push(("kurtosis", String::new(), (g2 / 5.0).min(1.0)));
        }
    }
    if n >= 4 {
        let m = mean(v);
        if m != 0.0 {
            let cv = if all_equal(v) { 0.0 } else { moment(v, 2).sqrt() / m.abs() };
            if cv <= 0.1 {
                out.push(("evenness", String::new(), 1.0 - cv / 0.1));
            }
        }
    }
    out
}

fn pair_insights(a: &[f64], b: &[f64], ordinal: bool, split: &str) -> Vec<(&'static str, String, f64)> {
    let mut out = Vec::new();
    if a.len() < 4 {
        return out;
    }
    let dir = |x: f64| if x >= 0.0 { "positive" } else { "negative" };
    if let Some(r) = pearson(a, b) {
        if r.abs() >= 0.7 {
            let t = if ordinal { "temporal_correlation" } else { "linear_correlation" };
            out.push((t, format!("{split}|{}", dir(r)), r.abs()));
            return out;
        }
    }
    if let Some(rho) = pearson(&ranks(a), &ranks(b)) {
        if rho.abs() >= 0.8 {
            out.push(("dependence", format!("{split}|{}", dir(rho)), rho.abs()));
        }
    }
    out
}

/// Insights with default thresholds, sum aggregation and first-split
/// compound pairing.
pub fn extract(t: &RawTable) -> Vec<Expected> {
    let mut out = Vec::new();
    let mut dim_names: Vec<&str> = t.dims.iter().map(|d| d.name.as_str()).collect();
    dim_names.sort_unstable();
    for (loc, rows) in lattice(t, 3) {
        let filtered: BTreeSet<&str> = loc.iter().map(|p| p.0.as_str()).collect();
        for &bd in &dim_names {
            if filtered.contains(bd) {
                continue;
            }
            let bi = t.dim_index(bd);
            let ordinal = t.dims[bi].ordinal;
            let (labels, values) = t.series(bi, &rows);
            for (itype, key, score) in series_insights(&labels, &values, ordinal) {
                out.push(Expected {
                    locator: loc.clone(),
                    breakdown: bd.to_owned(),
                    itype,
                    key,
                    score,
                });
            }

            let Some(&split) = dim_names.iter().find(|d| **d != bd && !filtered.contains(**d)) else {
                continue;
            };
            let si = t.dim_index(split);
            let groups: BTreeSet<&str> = rows.iter().map(|&r| t.rows[r].0[si].as_str()).collect();
            if groups.len() < 2 {
                continue;
            }
            let mut parts: Vec<(&str, Vec<String>, Vec<f64>, f64)> = groups
                .into_iter()
                .map(|g| {
                    let sub: Vec<usize> = rows.iter().copied().filter(|&r| t.rows[r].0[si] == g).collect();
                    let (l, v) = t.series(bi, &sub);
                    let mag = v.iter().map(|x| x.abs()).sum();
                    (g, l, v, mag)
                })
                .collect();
            parts.sort_by(|x, y| y.3.total_cmp(&x.3).then(x.0.cmp(y.0)));
            let (a, b) = (&parts[0], &parts[1]);
            if a.1 != b.1 {
                continue;
            }
            let split_key = format!("{split}|{}|{}", a.0, b.0);
            for (itype, key, score) in pair_insights(&a.2, &b.2, ordinal, &split_key) {
                out.push(Expected {
                    locator: loc.clone(),
                    breakdown: bd.to_owned(),
                    itype,
                    key,
                    score,
                });
            }
        }
    }
    out
}

mod check {
    use std::collections::{BTreeMap, BTreeSet};

    use iw_core::graph::{build_graph, Endpoint, RelationKind};
    use iw_core::insight::{extract_all, ExtractionConfig};
    use iw_core::table::{enumerate_subspaces, load_table_from_str, Locator, Table};

    use super::*;

    fn pairs_of(loc: &Locator) -> Pairs {
        loc.iter().map(|(d, v)| (d.to_owned(), v.to_owned())).collect()
    }

    fn load(raw: &RawTable) -> Result<Table, String> {
        load_table_from_str(&raw.to_csv(), Some(&raw.schema())).map_err(|e| e.to_string())
    }

    /// Lattice and graph of the seeded random table against the brute-force
    /// versions.
    pub fn check_lattice(seed: u64) -> Result<(), String> {
        let raw = random_table(seed);
        let table = load(&raw)?;
        let subs = enumerate_subspaces(&table, 3);
        let got: BTreeMap<Pairs, Vec<usize>> = subs
            .iter()
            .map(|s| {
                let mut rows = s.rows.clone();
                rows.sort_unstable();
                (pairs_of(&s.locator), rows)
            })
            .collect();
        let want = lattice(&raw, 3);
        if got.len() != subs.len() {
            return Err(format!("seed {seed}: duplicate subspaces"));
        }
        if got != want {
            let missing: Vec<_> = want.keys().filter(|k| !got.contains_key(*k)).collect();
            let extra: Vec<_> = got.keys().filter(|k| !want.contains_key(*k)).collect();
            return Err(format!(
                "seed {seed}: subspaces differ (missing {missing:?}, extra {extra:?}, or row sets differ)"
            ));
        }

        let graph = build_graph(&subs);
        let nodes: BTreeSet<Pairs> = graph.nodes().iter().map(pairs_of).collect();
        if nodes.len() != graph.node_count() || nodes != want.keys().cloned().collect() {
            return Err(format!("seed {seed}: graph nodes differ from lattice"));
        }
        let mut edges = BTreeSet::new();
        for e in graph.edges() {
            let a = pairs_of(&Locator::parse_canonical(&e.a).map_err(|x| x.to_string())?);
            let b = pairs_of(&Locator::parse_canonical(&e.b).map_err(|x| x.to_string())?);
            let edge = match e.relation {
                RelationKind::Sibling => {
                    let (x, y) = if a < b { (a, b) } else { (b, a) };
                    OracleEdge::Sibling(x, y)
                }
                RelationKind::ParentChild { parent: Endpoint::First } => OracleEdge::ParentChild(a, b),
                RelationKind::ParentChild { parent: Endpoint::Second } => OracleEdge::ParentChild(b, a),
            };
            if !edges.insert(edge) {
                return Err(format!("seed {seed}: duplicate edge {} - {}", e.a, e.b));
            }
        }
        let node_list: Vec<Pairs> = want.keys().cloned().collect();
        let expected = graph_edges(&node_list);
        if edges != expected {
            let missing = expected.difference(&edges).count();
            let extra = edges.difference(&expected).count();
            return Err(format!("seed {seed}: {missing} edges missing, {extra} unexpected"));
        }
        Ok(())
    }

    /// Catalog of the seeded random table against the naive detectors:
    /// identical (locator, breakdown, type, highlight) sets and scores within
    /// 1e-9.
    pub fn check_extraction(seed: u64) -> Result<usize, String> {
        let raw = random_table(seed);
        let table = load(&raw)?;
        let catalog = extract_all(&table, &ExtractionConfig::default()).map_err(|e| e.to_string())?;
        type Key = (Pairs, String, String, String);
        let got: BTreeMap<Key, f64> = catalog
            .insights()
            .iter()
            .map(|i| {
                (
                    (pairs_of(&i.ae.locator), i.ae.breakdown.clone(), i.itype.to_string(), i.highlight.key()),
                    i.score,
                )
            })
            .collect();
        let expected = extract(&raw);
        let want: BTreeMap<Key, f64> = expected
            .iter()
            .map(|e| ((e.locator.clone(), e.breakdown.clone(), e.itype.to_owned(), e.key.clone()), e.score))
            .collect();
        if got.len() != catalog.len() || want.len() != expected.len() {
            return Err(format!("seed {seed}: duplicate insight keys"));
        }
        let missing: Vec<&Key> = want.keys().filter(|k| !got.contains_key(*k)).collect();
        let extra: Vec<&Key> = got.keys().filter(|k| !want.contains_key(*k)).collect();
        if !missing.is_empty() || !extra.is_empty() {
            return Err(format!("seed {seed}: missing {missing:?}, unexpected {extra:?}"));
        }
        for (k, s) in &want {
            let g = got[k];
            if (g - s).abs() > 1e-9 {
                return Err(format!("seed {seed}: score of {k:?} is {g}, expected {s}"));
            }
        }
        Ok(want.len())
    }
}

#[allow(unused_imports)]
pub use check::{check_extraction, check_lattice};
