use std::fmt;

use serde::{Deserialize, Serialize};

use super::{apply_locator, Locator, Schema, Subspace, Table};
use crate::error::Result;
use crate::insight::ExtractionConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregate {
    Sum,
    Mean,
    Min,
    Max,
    Count,
}

impl Aggregate {
    pub fn as_str(self) -> &'static str {
        match self {
            Aggregate::Sum => "sum",
            Aggregate::Mean => "mean",
            Aggregate::Min => "min",
            Aggregate::Max => "max",
            Aggregate::Count => "count",
        }
    }

    fn fold(self, values: &[f64]) -> f64 {
        match self {
            Aggregate::Sum => values.iter().sum(),
            Aggregate::Mean => values.iter().sum::<f64>() / values.len() as f64,
            Aggregate::Min => values.iter().copied().fold(f64::INFINITY, f64::min),
            Aggregate::Max => values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            Aggregate::Count => values.len() as f64,
        }
    }
}

impl fmt::Display for Aggregate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `<subspace, breakdown, aggregate(measure)>`. The subspace is referenced by
/// its locator.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AnalysisEntity {
    pub locator: Locator,
    pub breakdown: String,
    pub measure: String,
    pub aggregate: Aggregate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub labels: Vec<String>,
    pub values: Vec<f64>,
    pub ordinal: bool,
}

impl Series {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// One entity per unfiltered categorical dimension, configured measure and
/// configured aggregate, in that nesting order.
pub fn enumerate_analysis_entities(
    sub: &Subspace,
    schema: &Schema,
    cfg: &ExtractionConfig,
) -> Vec<AnalysisEntity> {
    let measures = cfg.measures_for(schema);
    let aggregates = cfg.aggregate_set();
    let mut out = Vec::new();
    for breakdown in schema.dimensions() {
        if sub.locator.contains_dim(breakdown) {
            continue;
        }
        for measure in &measures {
            for &aggregate in &aggregates {
                out.push(AnalysisEntity {
                    locator: sub.locator.clone(),
                    breakdown: breakdown.to_owned(),
                    measure: measure.clone(),
                    aggregate,
                });
            }
        }
    }
    out
}

/// Aggregates the entity's measure per breakdown value over its subspace.
pub fn aggregate(ae: &AnalysisEntity, table: &Table) -> Result<Series> {
    let sub = apply_locator(table, &ae.locator)?;
    Ok(aggregate_rows(ae, &sub.rows, table))
}

/// Same as [`aggregate`] over an already materialized row set.
pub fn aggregate_rows(ae: &AnalysisEntity, rows: &[usize], table: &Table) -> Series {
    let col = table
        .categorical(&ae.breakdown)
        .expect("breakdown is categorical");
    let measure = table.numerical(&ae.measure).expect("measure is numerical");

    let mut buckets: Vec<Vec<f64>> = vec![Vec::new(); col.cardinality()];
    for &r in rows {
        buckets[col.codes()[r] as usize].push(measure[r]);
    }
    let mut present: Vec<u32> = (0..col.cardinality() as u32)
        .filter(|&c| !buckets[c as usize].is_empty())
        .collect();
    present.sort_by_key(|&c| col.sort_key(c));

    Series {
        labels: present.iter().map(|&c| col.value(c).to_owned()).collect(),
        values: present
            .iter()
            .map(|&c| ae.aggregate.fold(&buckets[c as usize]))
            .collect(),
        ordinal: col.is_ordinal(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::{enumerate_subspaces, load_table_from_str, ColumnSpec};

    fn table() -> Table {
        let hints = Schema {
            columns: vec![ColumnSpec::categorical("S").with_order(["spr", "sum", "aut"])],
        };
        load_table_from_str(
            "K,S,v\nx,aut,1\nx,spr,2\nx,spr,3\ny,sum,4\ny,aut,5\n",
            Some(&hints),
        )
        .unwrap()
    }

    #[test]
    fn sum_follows_ordinal_order() {
        let t = table();
        let ae = AnalysisEntity {
            locator: Locator::root(),
            breakdown: "S".into(),
            measure: "v".into(),
            aggregate: Aggregate::Sum,
        };
        let s = aggregate(&ae, &t).unwrap();
        assert_eq!(s.labels, ["spr", "sum", "aut"]);
        assert_eq!(s.values, [5.0, 4.0, 6.0]);
        assert!(s.ordinal);
    }

    #[test]
    fn single_row_subspace() {
        let t = table();
        let ae = AnalysisEntity {
            locator: Locator::root().with("K", "y").with("S", "sum"),
            breakdown: "K".into(),
            measure: "v".into(),
            aggregate: Aggregate::Sum,
        };
        let s = aggregate(&ae, &t).unwrap();
        assert_eq!((s.labels.as_slice(), s.values.as_slice()), (&["y".to_owned()][..], &[4.0][..]));
    }

    #[test]
    fn other_aggregates() {
        let t = table();
        let mk = |aggregate| AnalysisEntity {
            locator: Locator::root(),
            breakdown: "K".into(),
            measure: "v".into(),
            aggregate,
        };
        assert_eq!(aggregate(&mk(Aggregate::Mean), &t).unwrap().values, [2.0, 4.5]);
        assert_eq!(aggregate(&mk(Aggregate::Min), &t).unwrap().values, [1.0, 4.0]);
        assert_eq!(aggregate(&mk(Aggregate::Max), &t).unwrap().values, [3.0, 5.0]);
        assert_eq!(aggregate(&mk(Aggregate::Count), &t).unwrap().values, [3.0, 2.0]);
    }

    #[test]
    fn entity_counts() {
        let mut csv = String::from("A,B,C,D,E,v\n");
        csv.push_str("a,b,c,d,e,1\na2,b2,c2,d2,e2,2\n");
        let t = load_table_from_str(&csv, None).unwrap();
        let subs = enumerate_subspaces(&t, 5);
        let cfg = ExtractionConfig::default();
        let root = &subs[0];
        assert_eq!(enumerate_analysis_entities(root, t.schema(), &cfg).len(), 5);
        let two = subs.iter().find(|s| s.locator.len() == 2).unwrap();
        let cfg2 = ExtractionConfig {
            aggregates: vec![Aggregate::Sum, Aggregate::Mean],
            ..ExtractionConfig::default()
        };
        assert_eq!(enumerate_analysis_entities(two, t.schema(), &cfg2).len(), 6);
        let full = subs.iter().find(|s| s.locator.len() == 5).unwrap();
        assert!(enumerate_analysis_entities(full, t.schema(), &cfg).is_empty());
    }
}
