use std::collections::BTreeMap;

use rayon::prelude::*;

use super::{Locator, Subspace, Table};

/// Every non-empty subspace whose locator has at most `max_length` filters,
/// the root included, in [`Locator`] order. `max_length` is clamped to the
/// number of categorical dimensions.
pub fn enumerate_subspaces(table: &Table, max_length: usize) -> Vec<Subspace> {
    let dims = table.schema().dimensions();
    let max_length = max_length.min(dims.len());

    let mut combos: Vec<Vec<&str>> = Vec::new();
    for size in 0..=max_length {
        combinations(&dims, size, &mut Vec::new(), 0, &mut combos);
    }

    let mut out: Vec<Subspace> = combos
        .par_iter()
        .flat_map_iter(|combo| group_rows(table, combo))
        .collect();
    out.sort_by(|a, b| a.locator.cmp(&b.locator));
    out
}

fn combinations<'a>(
    dims: &[&'a str],
    size: usize,
    current: &mut Vec<&'a str>,
    start: usize,
    out: &mut Vec<Vec<&'a str>>,
) {
    if current.len() == size {
        out.push(current.clone());
        return;
    }
    for i in start..dims.len() {
        current.push(dims[i]);
        combinations(dims, size, current, i + 1, out);
        current.pop();
    }
}

fn group_rows(table: &Table, combo: &[&str]) -> Vec<Subspace> {
    let cols: Vec<_> = combo
        .iter()
        .map(|d| table.categorical(d).expect("categorical dimension"))
        .collect();
    let mut groups: BTreeMap<Vec<u32>, Vec<usize>> = BTreeMap::new();
    for row in 0..table.row_count() {
        let key: Vec<u32> = cols.iter().map(|c| c.codes()[row]).collect();
        groups.entry(key).or_default().push(row);
    }
    groups
        .into_iter()
        .map(|(key, rows)| Subspace {
            locator: Locator::from_pairs(
                combo
                    .iter()
                    .zip(&cols)
                    .zip(key)
                    .map(|((d, c), code)| (*d, c.value(code))),
            ),
            rows,
        })
        .collect()
}
