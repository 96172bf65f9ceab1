//! Template-based textual descriptions of insights.
//!
//! A description carries the subspace header, the type, the score and one
//! sentence. The header lists filter values with non-temporal filters first,
//! coarsest dimension first, and temporal (ordinal) filters last; the
//! sentence uses the same order: the first non-temporal value sets the scene
//! ("In JPN,"), the others qualify the measure ("the sales of PS4"), and
//! temporal values close the clause ("of 2021").

use std::collections::{BTreeMap, HashMap};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::insight::{Highlight, Insight, InsightType};
use crate::table::{Aggregate, Table};

pub const TEMPLATES_VERSION: &str = "iw-templates/1";
const BUILTIN_TEMPLATES: &str = include_str!("../resources/templates.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InsightDescription {
    pub insight_id: String,
    pub header: Vec<String>,
    pub itype: InsightType,
    pub score: f64,
    pub text: String,
}

impl InsightDescription {
    /// Single-line form used in prompts, score to three decimals.
    pub fn render(&self) -> String {
        format!(
            "<Header=({}), Type={}, Score={:.3}, Description=\"{}\">",
            self.header.join(", "),
            self.itype,
            self.score,
            self.text
        )
    }

    pub fn to_jsonl(descriptions: &[InsightDescription]) -> String {
        #[derive(Serialize)]
        struct Line<'a> {
            templates: &'a str,
            #[serde(flatten)]
            d: &'a InsightDescription,
        }
        let mut out = String::new();
        for d in descriptions {
            out.push_str(
                &serde_json::to_string(&Line {
                    templates: TEMPLATES_VERSION,
                    d,
                })
                .expect("description serializes"),
            );
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct TemplateSet {
    pub version: String,
    pub templates: BTreeMap<String, String>,
}

impl TemplateSet {
    pub fn builtin() -> &'static TemplateSet {
        static SET: OnceLock<TemplateSet> = OnceLock::new();
        SET.get_or_init(|| TemplateSet::parse(BUILTIN_TEMPLATES).expect("built-in templates are valid"))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let set: TemplateSet = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for t in InsightType::ALL {
            if !set.templates.contains_key(t.as_str()) {
                return Err(Error::Config(format!("no template for `{t}`")));
            }
        }
        Ok(set)
    }

    fn get(&self, itype: InsightType) -> &str {
        &self.templates[itype.as_str()]
    }
}

/// Per-dimension facts the narrator needs from the table.
#[derive(Debug, Clone, Default)]
pub struct NarrationContext {
    dims: HashMap<String, DimInfo>,
}

#[derive(Debug, Clone, Copy)]
struct DimInfo {
    ordinal: bool,
    cardinality: usize,
    position: usize,
}

impl NarrationContext {
    pub fn from_table(table: &Table) -> Self {
        let dims = table
            .schema()
            .columns
            .iter()
            .enumerate()
            .filter(|(_, c)| table.categorical(&c.name).is_some())
            .map(|(position, c)| {
                (
                    c.name.clone(),
                    DimInfo {
                        ordinal: c.is_ordinal(),
                        cardinality: table.cardinality(&c.name),
                        position,
                    },
                )
            })
            .collect();
        NarrationContext { dims }
    }

    fn info(&self, dim: &str) -> DimInfo {
        self.dims.get(dim).copied().unwrap_or(DimInfo {
            ordinal: false,
            cardinality: usize::MAX,
            position: usize::MAX,
        })
    }

    /// Filter values in narrative order, split into non-temporal and
    /// temporal parts.
    fn ordered<'a>(&self, ins: &'a Insight) -> (Vec<&'a str>, Vec<&'a str>) {
        let mut plain: Vec<(&str, &str)> = Vec::new();
        let mut temporal: Vec<(&str, &str)> = Vec::new();
        for (d, v) in ins.ae.locator.iter() {
            if self.info(d).ordinal {
                temporal.push((d, v));
            } else {
                plain.push((d, v));
            }
        }
        plain.sort_by_key(|(d, _)| {
            let i = self.info(d);
            (i.cardinality, i.position, *d)
        });
        temporal.sort_by_key(|(d, _)| (self.info(d).position, *d));
        (
            plain.into_iter().map(|p| p.1).collect(),
            temporal.into_iter().map(|p| p.1).collect(),
        )
    }
}

pub fn describe(ins: &Insight, ctx: &NarrationContext) -> InsightDescription {
    describe_with(ins, ctx, TemplateSet::builtin())
}

pub fn describe_with(ins: &Insight, ctx: &NarrationContext, templates: &TemplateSet) -> InsightDescription {
    let (plain, temporal) = ctx.ordered(ins);
    let header: Vec<String> = plain.iter().chain(&temporal).map(|s| (*s).to_owned()).collect();

    let measure = measure_phrase(ins.ae.aggregate, &ins.ae.measure);
    let mut scope = match plain.split_first() {
        Some((lead, _)) => format!("In {lead}, the {measure}"),
        None => format!("the {measure}"),
    };
    if plain.len() > 1 {
        scope.push_str(" of ");
        scope.push_str(&plain[1..].join(" and "));
    }
    let period = if temporal.is_empty() {
        String::new()
    } else {
        format!(" of {}", temporal.join(" "))
    };
    let breakdown = ins.ae.breakdown.to_lowercase();

    let mut slots: Vec<(&str, String)> = vec![
        ("scope", scope),
        ("period", period),
        ("breakdowns", plural(&breakdown)),
        ("breakdown", breakdown),
    ];
    match &ins.highlight {
        Highlight::Dominance { label, .. } => slots.push(("label", label.clone())),
        Highlight::Top2 { labels, share, .. } => {
            slots.push(("label", labels[0].clone()));
            slots.push(("label2", labels[1].clone()));
            slots.push(("share", format!("{}%", sig3(share * 100.0))));
        }
        Highlight::Outlier {
            label,
            value,
            direction,
            ..
        } => {
            slots.push(("label", label.clone()));
            slots.push(("value", sig3(*value)));
            slots.push(("direction", direction.as_str().to_owned()));
        }
        Highlight::OutstandingNegative { label, value, .. } => {
            slots.push(("label", label.clone()));
            slots.push(("value", sig3(*value)));
        }
        Highlight::Trend {
            direction, first, last, ..
        } => {
            slots.push(("direction", direction.as_str().to_owned()));
            slots.push(("first", first.clone()));
            slots.push(("last", last.clone()));
        }
        Highlight::Skewness { direction, label, .. } => {
            slots.push(("direction", direction.as_str().to_owned()));
            slots.push(("label", label.clone()));
        }
        Highlight::Kurtosis { kurtosis, label } => {
            slots.push(("label", label.clone()));
            slots.push(("coef", sig3(*kurtosis)));
        }
        Highlight::Evenness { cv } => slots.push(("coef", sig3(*cv))),
        Highlight::Correlation { split, r: coef, direction }
        | Highlight::Dependence { split, rho: coef, direction } => {
            slots.push(("split_dim", split.dimension.to_lowercase()));
            slots.push(("split_a", split.first.clone()));
            slots.push(("split_b", split.second.clone()));
            slots.push(("direction", direction.as_str().to_owned()));
            slots.push(("coef", sig3(*coef)));
        }
    }

    InsightDescription {
        insight_id: ins.id.clone(),
        header,
        itype: ins.itype,
        score: ins.score,
        text: capitalize(&fill(templates.get(ins.itype), &slots)),
    }
}

fn measure_phrase(agg: Aggregate, measure: &str) -> String {
    let m = measure.to_lowercase();
    match agg {
        Aggregate::Sum => m,
        Aggregate::Mean => format!("average {m}"),
        Aggregate::Min => format!("minimum {m}"),
        Aggregate::Max => format!("maximum {m}"),
        Aggregate::Count => "number of records".to_owned(),
    }
}

/// Replaces `{slot}` placeholders; unknown slots are left as they are.
pub fn fill(template: &str, slots: &[(&str, String)]) -> String {
    let mut out = String::with_capacity(template.len() + 32);
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        match after.find('}') {
            Some(close) => {
                let name = &after[..close];
                match slots.iter().find(|(k, _)| *k == name) {
                    Some((_, v)) => out.push_str(v),
                    None => {
                        out.push('{');
                        out.push_str(name);
                        out.push('}');
                    }
                }
                rest = &after[close + 1..];
            }
            None => {
                out.push_str(&rest[open..]);
                rest = "";
            }
        }
    }
    out.push_str(rest);
    out
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

fn plural(word: &str) -> String {
    let consonant_y = word.ends_with('y')
        && !word[..word.len() - 1].ends_with(['a', 'e', 'i', 'o', 'u']);
    if consonant_y {
        format!("{}ies", &word[..word.len() - 1])
    } else if word.ends_with(['s', 'x', 'z']) || word.ends_with("ch") || word.ends_with("sh") {
        format!("{word}es")
    } else {
        format!("{word}s")
    }
}

/// Three significant digits.
pub fn sig3(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x.is_finite() { "0".into() } else { x.to_string() };
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = 2 - magnitude;
    if decimals >= 0 {
        let s = format!("{:.*}", decimals as usize, x);
        // Rounding can carry into a new digit (9.995 -> 10.00).
        let digits = s.trim_start_matches('-').replace('.', "");
        if digits.trim_start_matches('0').len() > 3 && decimals > 0 {
            format!("{:.*}", decimals as usize - 1, x)
        } else {
            s
        }
    } else {
        let p = 10f64.powi(-decimals);
        format!("{:.0}", (x / p).round() * p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(sig3(0.524), "0.524");
        assert_eq!(sig3(1234.0), "1230");
        assert_eq!(sig3(12.345), "12.3");
        assert_eq!(sig3(-0.0012345), "-0.00123");
        assert_eq!(sig3(9.996), "10.0");
        assert_eq!(sig3(0.0), "0");
        assert_eq!(sig3(100.0), "100");
    }

    #[test]
    fn plurals() {
        assert_eq!(plural("season"), "seasons");
        assert_eq!(plural("company"), "companies");
        assert_eq!(plural("day"), "days");
        assert_eq!(plural("box"), "boxes");
    }

    #[test]
    fn fill_slots() {
        let s = fill("a {x} b {y} {z}", &[("x", "1".into()), ("y", "2".into())]);
        assert_eq!(s, "a 1 b 2 {z}");
    }

    #[test]
    fn builtin_templates_cover_all_types() {
        let set = TemplateSet::builtin();
        assert_eq!(set.version, TEMPLATES_VERSION);
        assert_eq!(set.templates.len(), 11);
    }

    #[test]
    fn missing_template_rejected() {
        assert!(TemplateSet::parse("version = \"x\"\n[templates]\ndominance = \"a\"\n").is_err());
    }
}
