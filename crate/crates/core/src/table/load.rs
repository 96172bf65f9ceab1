use std::collections::{BTreeSet, HashSet};
use std::io::Read;

use super::{CategoricalColumn, ColumnData, ColumnKind, ColumnSpec, Schema, Table};
use crate::error::IngestError;

pub fn load_table_from_str(csv_text: &str, hints: Option<&Schema>) -> Result<Table, IngestError> {
    load_table(csv_text.as_bytes(), hints)
}

/// Reads an RFC 4180 CSV stream with a header row. Cells are trimmed.
/// Columns without a hint are numerical when every non-empty cell parses as
/// a finite number, categorical otherwise. Rows with an empty measure cell
/// are dropped and counted.
pub fn load_table<R: Read>(source: R, hints: Option<&Schema>) -> Result<Table, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);

    let mut records = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| IngestError::Csv(e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        records.push((line, rec));
    }
    let Some(((_, header), body)) = records.split_first() else {
        return Err(IngestError::Empty);
    };
    let names: Vec<String> = header.iter().map(str::to_owned).collect();
    if names.iter().all(String::is_empty) && body.is_empty() {
        return Err(IngestError::Empty);
    }
    let mut seen = HashSet::new();
    for n in &names {
        if n.is_empty() {
            return Err(IngestError::Schema("empty column name in header".into()));
        }
        if !seen.insert(n.as_str()) {
            return Err(IngestError::Schema(format!("duplicate column `{n}`")));
        }
    }
    let arity = names.len();
    for (line, rec) in body {
        if rec.len() != arity {
            return Err(IngestError::Ragged {
                line: *line,
                expected: arity,
                found: rec.len(),
            });
        }
    }
    if body.is_empty() {
        return Err(IngestError::NoRows);
    }

    if let Some(h) = hints {
        for spec in &h.columns {
            if !names.contains(&spec.name) {
                return Err(IngestError::Schema(format!(
                    "hinted column `{}` is not in the header",
                    spec.name
                )));
            }
        }
    }

    let specs: Vec<ColumnSpec> = names
        .iter()
        .enumerate()
        .map(|(i, name)| match hints.and_then(|h| h.column(name)) {
            Some(spec) => spec.clone(),
            None => {
                let numeric = body.iter().any(|(_, r)| !r[i].is_empty())
                    && body
                        .iter()
                        .all(|(_, r)| r[i].is_empty() || parse_finite(&r[i]).is_some());
                if numeric {
                    ColumnSpec::numerical(name.clone())
                } else {
                    ColumnSpec::categorical(name.clone())
                }
            }
        })
        .collect();

    if !specs.iter().any(|s| s.kind == ColumnKind::Categorical) {
        return Err(IngestError::Schema("no categorical column".into()));
    }
    if !specs.iter().any(|s| s.kind == ColumnKind::Numerical) {
        return Err(IngestError::Schema("no numerical column".into()));
    }

    // Parse numbers first so that rows with empty measures can be dropped
    // before dictionaries are built.
    let mut keep = vec![true; body.len()];
    let mut numbers: Vec<Option<Vec<f64>>> = Vec::with_capacity(arity);
    for (i, spec) in specs.iter().enumerate() {
        if spec.kind != ColumnKind::Numerical {
            numbers.push(None);
            continue;
        }
        let mut col = Vec::with_capacity(body.len());
        for (r, (line, rec)) in body.iter().enumerate() {
            let cell = &rec[i];
            if cell.is_empty() {
                keep[r] = false;
                col.push(f64::NAN);
                continue;
            }
            match parse_finite(cell) {
                Some(v) => col.push(v),
                None => {
                    return Err(IngestError::BadNumber {
                        line: *line,
                        column: spec.name.clone(),
                        value: cell.to_owned(),
                    })
                }
            }
        }
        numbers.push(Some(col));
    }
    let dropped_rows = keep.iter().filter(|k| !**k).count();
    if dropped_rows > 0 {
        tracing::warn!(dropped_rows, "rows with empty measure cells dropped");
    }
    let kept: Vec<usize> = (0..body.len()).filter(|&r| keep[r]).collect();
    if kept.is_empty() {
        return Err(IngestError::NoRows);
    }

    let mut columns = Vec::with_capacity(arity);
    let mut resolved = Vec::with_capacity(arity);
    for (i, spec) in specs.into_iter().enumerate() {
        match spec.kind {
            ColumnKind::Numerical => {
                let all = numbers[i].take().expect("numerical column parsed");
                columns.push(ColumnData::Numerical(kept.iter().map(|&r| all[r]).collect()));
                resolved.push(ColumnSpec {
                    ordinal_order: None,
                    ordinal: false,
                    ..spec
                });
            }
            ColumnKind::Categorical => {
                let cells: Vec<&str> = kept.iter().map(|&r| &body[r].1[i]).collect();
                let (column, order) = encode_categorical(&spec, &cells)?;
                columns.push(ColumnData::Categorical(column));
                resolved.push(ColumnSpec {
                    ordinal: order.is_some(),
                    ordinal_order: order,
                    ..spec
                });
            }
        }
    }

    Ok(Table {
        schema: Schema { columns: resolved },
        columns,
        row_count: kept.len(),
        dropped_rows,
    })
}

fn parse_finite(cell: &str) -> Option<f64> {
    cell.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn encode_categorical(
    spec: &ColumnSpec,
    cells: &[&str],
) -> Result<(CategoricalColumn, Option<Vec<String>>), IngestError> {
    let distinct: BTreeSet<&str> = cells.iter().copied().collect();
    let dictionary: Vec<String> = distinct.iter().map(|s| (*s).to_owned()).collect();
    let codes = cells
        .iter()
        .map(|c| dictionary.binary_search_by(|d| d.as_str().cmp(c)).expect("value in dictionary") as u32)
        .collect();

    let order: Option<Vec<String>> = match (&spec.ordinal_order, spec.ordinal) {
        (Some(list), _) => {
            let mut seen = HashSet::new();
            for v in list {
                if !seen.insert(v.as_str()) {
                    return Err(IngestError::Schema(format!(
                        "ordinal order of `{}` lists {v:?} twice",
                        spec.name
                    )));
                }
            }
            if let Some(missing) = distinct.iter().find(|v| !seen.contains(**v)) {
                return Err(IngestError::Schema(format!(
                    "ordinal order of `{}` is missing {missing:?}",
                    spec.name
                )));
            }
            Some(
                list.iter()
                    .filter(|v| distinct.contains(v.as_str()))
                    .cloned()
                    .collect(),
            )
        }
        (None, true) => {
            let mut values: Vec<&str> = distinct.iter().copied().collect();
            let numeric: Option<Vec<f64>> = values.iter().map(|v| parse_finite(v)).collect();
            if numeric.is_some() {
                values.sort_by(|a, b| {
                    let (x, y) = (parse_finite(a).unwrap(), parse_finite(b).unwrap());
                    x.total_cmp(&y).then_with(|| a.cmp(b))
                });
            }
            Some(values.into_iter().map(str::to_owned).collect())
        }
        (None, false) => None,
    };

    let ordinal_rank = order.as_ref().map(|o| {
        let mut rank = vec![0u32; dictionary.len()];
        for (pos, v) in o.iter().enumerate() {
            let code = dictionary.binary_search(v).expect("ordinal value in dictionary");
            rank[code] = pos as u32;
        }
        rank
    });

    Ok((
        CategoricalColumn {
            dictionary,
            codes,
            ordinal_rank,
        },
        order,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infers_kinds() {
        let t = load_table_from_str("City, Sales\nA, 1\nB, 2.5\n", None).unwrap();
        assert_eq!(t.row_count(), 2);
        assert!(t.schema().is_categorical("City"));
        assert!(t.schema().is_numerical("Sales"));
        assert_eq!(t.categorical("City").unwrap().dictionary(), ["A", "B"]);
    }

    #[test]
    fn single_row() {
        let t = load_table_from_str("a,b\nx,3\n", None).unwrap();
        assert_eq!(t.row_count(), 1);
    }

    #[test]
    fn ragged_row_names_line() {
        let err = load_table_from_str("a,b\nx,1\ny\n", None).unwrap_err();
        assert_eq!(
            err,
            IngestError::Ragged {
                line: 3,
                expected: 2,
                found: 1
            }
        );
    }

    #[test]
    fn bad_number_in_hinted_column() {
        let hints = Schema {
            columns: vec![ColumnSpec::numerical("v")],
        };
        let err = load_table_from_str("k,v\nx,1\ny,abc\n", Some(&hints)).unwrap_err();
        match err {
            IngestError::BadNumber { line, column, value } => {
                assert_eq!((line, column.as_str(), value.as_str()), (3, "v", "abc"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_inputs() {
        assert_eq!(load_table_from_str("", None).unwrap_err(), IngestError::Empty);
        assert_eq!(load_table_from_str("a,b\n", None).unwrap_err(), IngestError::NoRows);
    }

    #[test]
    fn infinite_values_are_not_numbers() {
        let hints = Schema {
            columns: vec![ColumnSpec::numerical("v")],
        };
        assert!(load_table_from_str("k,v\nx,inf\n", Some(&hints)).is_err());
    }

    #[test]
    fn empty_measure_rows_dropped() {
        let t = load_table_from_str("k,v\nx,1\ny,\nz,3\n", None).unwrap();
        assert_eq!(t.row_count(), 2);
        assert_eq!(t.dropped_rows(), 1);
        assert_eq!(t.categorical("k").unwrap().dictionary(), ["x", "z"]);
    }

    #[test]
    fn quoted_fields() {
        let t = load_table_from_str("k,v\n\"a, b\",1\n\"say \"\"hi\"\"\",2\n", None).unwrap();
        assert_eq!(t.categorical("k").unwrap().dictionary(), ["a, b", "say \"hi\""]);
    }

    #[test]
    fn implicit_ordinal_sorts_numerically() {
        let hints = Schema {
            columns: vec![ColumnSpec {
                ordinal: true,
                ..ColumnSpec::categorical("Year")
            }],
        };
        let t = load_table_from_str("Year,v\n10,1\n9,2\n100,3\n", Some(&hints)).unwrap();
        assert_eq!(
            t.schema().column("Year").unwrap().ordinal_order.as_deref().unwrap(),
            ["9", "10", "100"]
        );
    }

    #[test]
    fn ordinal_order_must_cover_values() {
        let hints = Schema {
            columns: vec![ColumnSpec::categorical("S").with_order(["a"])],
        };
        assert!(load_table_from_str("S,v\na,1\nb,2\n", Some(&hints)).is_err());
    }

    #[test]
    fn needs_both_kinds() {
        assert!(load_table_from_str("a,b\n1,2\n", None).is_err());
        assert!(load_table_from_str("a,b\nx,y\n", None).is_err());
    }
}
