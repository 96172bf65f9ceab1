//! Tabular data model: schema, columnar table storage, locators, subspaces
//! and analysis entities.

mod entity;
mod lattice;
mod load;
mod locator;

use serde::{Deserialize, Serialize};

pub use entity::{aggregate, aggregate_rows, enumerate_analysis_entities, Aggregate, AnalysisEntity, Series};
pub use lattice::enumerate_subspaces;
pub use load::{load_table, load_table_from_str};
pub use locator::{apply_locator, locator_length, Locator, Subspace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Categorical,
    Numerical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
    /// Explicit ordering of the column's values, for temporal dimensions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ordinal_order: Option<Vec<String>>,
    /// Declares the column ordinal without listing the order; values are then
    /// sorted numerically when they all parse as numbers, lexicographically
    /// otherwise.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub ordinal: bool,
}

impl ColumnSpec {
    pub fn categorical(name: impl Into<String>) -> Self {
        ColumnSpec {
            name: name.into(),
            kind: ColumnKind::Categorical,
            ordinal_order: None,
            ordinal: false,
        }
    }

    pub fn numerical(name: impl Into<String>) -> Self {
        ColumnSpec {
            name: name.into(),
            kind: ColumnKind::Numerical,
            ordinal_order: None,
            ordinal: false,
        }
    }

    pub fn with_order<I, S>(mut self, order: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.ordinal_order = Some(order.into_iter().map(Into::into).collect());
        self.ordinal = true;
        self
    }

    pub fn is_ordinal(&self) -> bool {
        self.ordinal || self.ordinal_order.is_some()
    }
}

/// Column layout of a table. Also the shape of the JSON schema-hint sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Schema {
    pub columns: Vec<ColumnSpec>,
}

impl Schema {
    pub fn column(&self, name: &str) -> Option<&ColumnSpec> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn is_categorical(&self, name: &str) -> bool {
        self.column(name).is_some_and(|c| c.kind == ColumnKind::Categorical)
    }

    pub fn is_numerical(&self, name: &str) -> bool {
        self.column(name).is_some_and(|c| c.kind == ColumnKind::Numerical)
    }

    /// Categorical column names, sorted.
    pub fn dimensions(&self) -> Vec<&str> {
        let mut dims: Vec<&str> = self
            .columns
            .iter()
            .filter(|c| c.kind == ColumnKind::Categorical)
            .map(|c| c.name.as_str())
            .collect();
        dims.sort_unstable();
        dims
    }

    /// Numerical column names, sorted.
    pub fn measures(&self) -> Vec<&str> {
        let mut m: Vec<&str> = self
            .columns
            .iter()
            .filter(|c| c.kind == ColumnKind::Numerical)
            .map(|c| c.name.as_str())
            .collect();
        m.sort_unstable();
        m
    }
}

/// Dictionary-encoded categorical column. The dictionary is sorted, so code
/// order equals lexicographic value order.
#[derive(Debug, Clone)]
pub struct CategoricalColumn {
    dictionary: Vec<String>,
    codes: Vec<u32>,
    /// Position of each code in the ordinal order, when the column is ordinal.
    ordinal_rank: Option<Vec<u32>>,
}

impl CategoricalColumn {
    pub fn dictionary(&self) -> &[String] {
        &self.dictionary
    }

    pub fn codes(&self) -> &[u32] {
        &self.codes
    }

    pub fn code_of(&self, value: &str) -> Option<u32> {
        self.dictionary
            .binary_search_by(|v| v.as_str().cmp(value))
            .ok()
            .map(|i| i as u32)
    }

    pub fn value(&self, code: u32) -> &str {
        &self.dictionary[code as usize]
    }

    pub fn cardinality(&self) -> usize {
        self.dictionary.len()
    }

    pub fn is_ordinal(&self) -> bool {
        self.ordinal_rank.is_some()
    }

    /// Sort key used when laying out series labels.
    pub fn sort_key(&self, code: u32) -> u32 {
        match &self.ordinal_rank {
            Some(rank) => rank[code as usize],
            None => code,
        }
    }
}

#[derive(Debug, Clone)]
pub enum ColumnData {
    Categorical(CategoricalColumn),
    Numerical(Vec<f64>),
}

/// Immutable, column-oriented table.
#[derive(Debug, Clone)]
pub struct Table {
    schema: Schema,
    columns: Vec<ColumnData>,
    row_count: usize,
    dropped_rows: usize,
}

impl Table {
    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn row_count(&self) -> usize {
        self.row_count
    }

    /// Rows skipped at load time because a measure cell was empty.
    pub fn dropped_rows(&self) -> usize {
        self.dropped_rows
    }

    pub fn column(&self, name: &str) -> Option<&ColumnData> {
        self.schema.position(name).map(|i| &self.columns[i])
    }

    pub fn categorical(&self, name: &str) -> Option<&CategoricalColumn> {
        match self.column(name) {
            Some(ColumnData::Categorical(c)) => Some(c),
            _ => None,
        }
    }

    pub fn numerical(&self, name: &str) -> Option<&[f64]> {
        match self.column(name) {
            Some(ColumnData::Numerical(v)) => Some(v),
            _ => None,
        }
    }

    /// Number of distinct values of a categorical column.
    pub fn cardinality(&self, name: &str) -> usize {
        self.categorical(name).map_or(0, |c| c.cardinality())
    }

    /// Text of one cell, numbers rendered with their shortest round-trip form.
    pub fn cell_text(&self, row: usize, column: usize) -> String {
        match &self.columns[column] {
            ColumnData::Categorical(c) => c.value(c.codes[row]).to_owned(),
            ColumnData::Numerical(v) => v[row].to_string(),
        }
    }

    /// Sum of one measure over a set of rows.
    pub fn measure_sum(&self, measure: &str, rows: &[usize]) -> f64 {
        self.numerical(measure)
            .map_or(0.0, |v| rows.iter().map(|&r| v[r]).sum())
    }
}
