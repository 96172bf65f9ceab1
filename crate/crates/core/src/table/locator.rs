use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::Table;
use crate::error::{Error, Result};

/// Conjunction of `dimension = value` filters over distinct categorical
/// dimensions. The empty locator denotes the whole table.
///
/// Locators order by length first, then by their `(dimension, value)` pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Locator {
    filters: BTreeMap<String, String>,
}

impl Locator {
    pub fn root() -> Self {
        Self::default()
    }

    pub fn from_pairs<I, K, V>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: Into<String>,
    {
        Locator {
            filters: pairs.into_iter().map(|(k, v)| (k.into(), v.into())).collect(),
        }
    }

    pub fn with(mut self, dim: impl Into<String>, value: impl Into<String>) -> Self {
        self.filters.insert(dim.into(), value.into());
        self
    }

    pub fn without(&self, dim: &str) -> Self {
        let mut filters = self.filters.clone();
        filters.remove(dim);
        Locator { filters }
    }

    pub fn len(&self) -> usize {
        self.filters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.filters.is_empty()
    }

    pub fn get(&self, dim: &str) -> Option<&str> {
        self.filters.get(dim).map(String::as_str)
    }

    pub fn contains_dim(&self, dim: &str) -> bool {
        self.filters.contains_key(dim)
    }

    /// Filters in dimension-name order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.filters.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn dims(&self) -> impl Iterator<Item = &str> {
        self.filters.keys().map(String::as_str)
    }

    /// `dim=value` pairs sorted by dimension, joined with `&`. `%`, `&` and
    /// `=` inside names or values are percent-escaped.
    pub fn canonical(&self) -> String {
        self.filters
            .iter()
            .map(|(k, v)| format!("{}={}", escape(k), escape(v)))
            .collect::<Vec<_>>()
            .join("&")
    }

    pub fn parse_canonical(text: &str) -> Result<Self> {
        let mut filters = BTreeMap::new();
        if text.is_empty() {
            return Ok(Locator { filters });
        }
        for part in text.split('&') {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::InvalidLocator(format!("missing `=` in {part:?}")))?;
            let k = unescape(k)?;
            if filters.insert(k.clone(), unescape(v)?).is_some() {
                return Err(Error::InvalidLocator(format!("dimension `{k}` repeated")));
            }
        }
        Ok(Locator { filters })
    }

    /// Checks that every key is a categorical dimension and every value
    /// occurs in its column.
    pub fn validate(&self, table: &Table) -> Result<()> {
        for (dim, value) in &self.filters {
            let col = table
                .categorical(dim)
                .ok_or_else(|| Error::InvalidLocator(format!("`{dim}` is not a categorical dimension")))?;
            if col.code_of(value).is_none() {
                return Err(Error::InvalidLocator(format!("`{dim}` has no value {value:?}")));
            }
        }
        Ok(())
    }
}

impl Ord for Locator {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.filters.iter().cmp(other.filters.iter()))
    }
}

impl PartialOrd for Locator {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Locator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let values: Vec<&str> = self.filters.values().map(String::as_str).collect();
        write!(f, "Loc({})", values.join(", "))
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '%' => out.push_str("%25"),
            '&' => out.push_str("%26"),
            '=' => out.push_str("%3D"),
            c => out.push(c),
        }
    }
    out
}

fn unescape(s: &str) -> Result<String> {
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(i) = rest.find('%') {
        out.push_str(&rest[..i]);
        let code = rest.get(i + 1..i + 3);
        match code {
            Some("25") => out.push('%'),
            Some("26") => out.push('&'),
            Some("3D") => out.push('='),
            _ => return Err(Error::InvalidLocator(format!("bad escape in {s:?}"))),
        }
        rest = &rest[i + 3..];
    }
    out.push_str(rest);
    Ok(out)
}

pub fn locator_length(loc: &Locator) -> usize {
    loc.len()
}

/// A locator together with the rows it selects. Never empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subspace {
    pub locator: Locator,
    /// Ascending row positions.
    pub rows: Vec<usize>,
}

impl Subspace {
    pub fn row_count(&self) -> usize {
        self.rows.len()
    }
}

/// Selects the rows matching every filter. An empty match is reported as
/// [`Error::EmptySubspace`].
pub fn apply_locator(table: &Table, loc: &Locator) -> Result<Subspace> {
    loc.validate_dims(table)?;
    let mut filters = Vec::with_capacity(loc.len());
    for (dim, value) in loc.iter() {
        let col = table.categorical(dim).expect("validated dimension");
        match col.code_of(value) {
            Some(code) => filters.push((col.codes(), code)),
            None => return Err(Error::EmptySubspace(loc.canonical())),
        }
    }
    let rows: Vec<usize> = (0..table.row_count())
        .filter(|&r| filters.iter().all(|(codes, code)| codes[r] == *code))
        .collect();
    if rows.is_empty() {
        return Err(Error::EmptySubspace(loc.canonical()));
    }
    Ok(Subspace {
        locator: loc.clone(),
        rows,
    })
}

impl Locator {
    fn validate_dims(&self, table: &Table) -> Result<()> {
        for dim in self.dims() {
            if table.categorical(dim).is_none() {
                return Err(Error::InvalidLocator(format!(
                    "`{dim}` is not a categorical dimension"
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::load_table_from_str;

    fn sony_table() -> Table {
        load_table_from_str(
            "Company,Location,Season,Sales\n\
             Sony,Asia,Spr,1\nSony,Europe,Spr,2\nNintendo,Asia,Sum,3\nSony,Asia,Sum,4\n",
            None,
        )
        .unwrap()
    }

    #[test]
    fn lengths() {
        assert_eq!(locator_length(&Locator::root()), 0);
        let l = Locator::from_pairs([("Company", "Sony"), ("Location", "Europe")]);
        assert_eq!(locator_length(&l), 2);
        assert_eq!(locator_length(&l.clone().with("Season", "Spr")), 3);
    }

    #[test]
    fn apply_filters_rows() {
        let t = sony_table();
        let s = apply_locator(&t, &Locator::root().with("Company", "Sony")).unwrap();
        assert_eq!(s.rows, vec![0, 1, 3]);
        let all = apply_locator(&t, &Locator::root()).unwrap();
        assert_eq!(all.rows.len(), 4);
    }

    #[test]
    fn absent_value_signals_empty() {
        let t = sony_table();
        let err = apply_locator(&t, &Locator::root().with("Company", "Sega")).unwrap_err();
        assert!(matches!(err, Error::EmptySubspace(_)));
        let err = apply_locator(
            &t,
            &Locator::from_pairs([("Company", "Nintendo"), ("Location", "Europe")]),
        )
        .unwrap_err();
        assert!(matches!(err, Error::EmptySubspace(_)));
    }

    #[test]
    fn unknown_dimension_rejected() {
        let t = sony_table();
        assert!(matches!(
            apply_locator(&t, &Locator::root().with("Sales", "1")),
            Err(Error::InvalidLocator(_))
        ));
    }

    #[test]
    fn canonical_text() {
        let l = Locator::from_pairs([("b", "x=1"), ("a", "p&q")]);
        assert_eq!(l.canonical(), "a=p%26q&b=x%3D1");
        assert_eq!(Locator::parse_canonical(&l.canonical()).unwrap(), l);
        assert_eq!(Locator::root().canonical(), "");
        assert_eq!(Locator::parse_canonical("").unwrap(), Locator::root());
        assert!(Locator::parse_canonical("a=1&a=2").is_err());
    }

    #[test]
    fn ordering_is_length_first() {
        let a = Locator::root().with("z", "1");
        let b = Locator::from_pairs([("a", "1"), ("b", "1")]);
        assert!(Locator::root() < a && a < b);
    }
}
