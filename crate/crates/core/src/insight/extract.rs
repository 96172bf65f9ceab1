use std::collections::BTreeMap;
use std::sync::OnceLock;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::catalog::{Diagnostics, InsightCatalog};
use super::{Category, Detection, DetectorRegistry, ExtractionConfig, Highlight, Insight, InsightType, SeriesPair, SplitPair};
use crate::error::{Error, Result};
use crate::table::{aggregate_rows, enumerate_analysis_entities, enumerate_subspaces, AnalysisEntity, Series, Subspace, Table};

fn default_registry() -> &'static DetectorRegistry {
    static REGISTRY: OnceLock<DetectorRegistry> = OnceLock::new();
    REGISTRY.get_or_init(DetectorRegistry::default)
}

/// Dominance, top-2, outlier and outstanding-negative over one series.
pub fn detect_point_insights(series: &Series, cfg: &ExtractionConfig) -> Vec<Detection> {
    default_registry().run_series(series, cfg, |t| t.category() == Category::Point)
}

/// Trend, skewness, kurtosis and evenness over one series.
pub fn detect_shape_insights(series: &Series, cfg: &ExtractionConfig) -> Vec<Detection> {
    default_registry().run_series(series, cfg, |t| t.category() == Category::Shape)
}

/// Correlation and dependence between two aligned sub-series.
pub fn detect_compound_insights(pair: &SeriesPair, cfg: &ExtractionConfig) -> Result<Vec<Detection>> {
    check_alignment(&pair.a, &pair.b)?;
    Ok(default_registry().run_pairs(pair, cfg))
}

fn check_alignment(a: &Series, b: &Series) -> Result<()> {
    if a.labels != b.labels {
        return Err(Error::Alignment(format!(
            "labels {:?} and {:?} differ",
            a.labels, b.labels
        )));
    }
    Ok(())
}

/// Stable key of an insight: hash over the entity, the type and the
/// highlight key, truncated to 64 bits.
pub fn insight_id(ae: &AnalysisEntity, itype: InsightType, highlight: &Highlight) -> String {
    let mut h = Sha256::new();
    for part in [
        ae.locator.canonical().as_str(),
        &ae.breakdown,
        &ae.measure,
        ae.aggregate.as_str(),
        itype.as_str(),
        &highlight.key(),
    ] {
        h.update(part.as_bytes());
        h.update([0x1f]);
    }
    hex::encode(&h.finalize()[..8])
}

pub fn extract_all(table: &Table, cfg: &ExtractionConfig) -> Result<InsightCatalog> {
    extract_with(table, cfg, default_registry())
}

/// Scans every subspace of the lattice and every analysis entity in it with
/// the detectors of `registry`.
pub fn extract_with(table: &Table, cfg: &ExtractionConfig, registry: &DetectorRegistry) -> Result<InsightCatalog> {
    cfg.validate()?;
    let subspaces = enumerate_subspaces(table, cfg.max_locator_length);
    let totals: BTreeMap<String, f64> = cfg
        .measures_for(table.schema())
        .into_iter()
        .map(|m| {
            let all: Vec<usize> = (0..table.row_count()).collect();
            let sum = table.measure_sum(&m, &all);
            (m, sum)
        })
        .collect();

    let parts: Vec<(Vec<Insight>, Diagnostics)> = subspaces
        .par_iter()
        .map(|sub| scan_subspace(table, sub, cfg, registry, &totals))
        .collect();

    let mut diagnostics = Diagnostics {
        subspaces: subspaces.len(),
        ..Diagnostics::default()
    };
    let mut insights = Vec::new();
    for (found, d) in parts {
        insights.extend(found);
        diagnostics.absorb(&d);
    }
    InsightCatalog::new(insights, diagnostics)
}

fn scan_subspace(
    table: &Table,
    sub: &Subspace,
    cfg: &ExtractionConfig,
    registry: &DetectorRegistry,
    totals: &BTreeMap<String, f64>,
) -> (Vec<Insight>, Diagnostics) {
    let mut diag = Diagnostics::default();
    let mut out = Vec::new();
    let with_pairs = registry.has_pair_detectors(cfg);

    for ae in enumerate_analysis_entities(sub, table.schema(), cfg) {
        diag.analysis_entities += 1;
        let impact = if cfg.impact_weighting {
            let total = totals.get(&ae.measure).copied().unwrap_or(0.0);
            if total == 0.0 {
                1.0
            } else {
                (table.measure_sum(&ae.measure, &sub.rows) / total).abs().min(1.0)
            }
        } else {
            1.0
        };

        let series = aggregate_rows(&ae, &sub.rows, table);
        for det in registry.run_series(&series, cfg, |_| true) {
            push(&mut out, &mut diag, cfg, &ae, det, impact, &series, None);
        }

        if !with_pairs {
            continue;
        }
        let mut split_dims = table
            .schema()
            .dimensions()
            .into_iter()
            .filter(|d| *d != ae.breakdown && !sub.locator.contains_dim(d));
        let chosen: Vec<&str> = if cfg.compound_all_pairs {
            split_dims.collect()
        } else {
            split_dims.next().into_iter().collect()
        };
        for dim in chosen {
            let Some(pair) = split_pair(table, sub, &ae, dim) else {
                continue;
            };
            if check_alignment(&pair.a, &pair.b).is_err() {
                diag.alignment_skips += 1;
                continue;
            }
            diag.compound_pairs += 1;
            for det in registry.run_pairs(&pair, cfg) {
                push(&mut out, &mut diag, cfg, &ae, det, impact, &pair.a, Some(&pair.b));
            }
        }
    }
    (out, diag)
}

#[allow(clippy::too_many_arguments)]
fn push(
    out: &mut Vec<Insight>,
    diag: &mut Diagnostics,
    cfg: &ExtractionConfig,
    ae: &AnalysisEntity,
    det: Detection,
    impact: f64,
    series: &Series,
    series_b: Option<&Series>,
) {
    let score = det.score * impact;
    if score < cfg.score_floor(det.itype) {
        diag.below_floor += 1;
        return;
    }
    out.push(Insight {
        id: insight_id(ae, det.itype, &det.highlight),
        ae: ae.clone(),
        category: det.itype.category(),
        itype: det.itype,
        score,
        highlight: det.highlight,
        series: series.clone(),
        series_b: series_b.cloned(),
    });
}

/// Splits the subspace by `dim` and pairs the two sub-series with the largest
/// total magnitude over the entity's breakdown.
fn split_pair(table: &Table, sub: &Subspace, ae: &AnalysisEntity, dim: &str) -> Option<SeriesPair> {
    let col = table.categorical(dim)?;
    let mut groups: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for &r in &sub.rows {
        groups.entry(col.codes()[r]).or_default().push(r);
    }
    if groups.len() < 2 {
        return None;
    }
    let mut parts: Vec<(u32, Series, f64)> = groups
        .into_iter()
        .map(|(code, rows)| {
            let s = aggregate_rows(ae, &rows, table);
            let magnitude = s.values.iter().map(|v| v.abs()).sum();
            (code, s, magnitude)
        })
        .collect();
    parts.sort_by(|x, y| y.2.total_cmp(&x.2).then(x.0.cmp(&y.0)));
    let mut it = parts.into_iter();
    let (ca, a, _) = it.next()?;
    let (cb, b, _) = it.next()?;
    Some(SeriesPair {
        a,
        b,
        split: SplitPair {
            dimension: dim.to_owned(),
            first: col.value(ca).to_owned(),
            second: col.value(cb).to_owned(),
        },
    })
}
