use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::InsightType;
use crate::error::{Error, Result};
use crate::table::{Aggregate, Schema};

/// Detection thresholds, expressed on each detector's own statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    /// Minimum share of the largest value.
    pub dominance: f64,
    /// Minimum combined share of the two largest values.
    pub top2: f64,
    /// Minimum robust z-score, also used for outstanding negatives.
    pub outlier_z: f64,
    /// Minimum |Pearson r| against position.
    pub trend_r: f64,
    /// Minimum |adjusted skewness|.
    pub skewness: f64,
    /// Minimum adjusted excess kurtosis.
    pub kurtosis: f64,
    /// Maximum coefficient of variation.
    pub evenness_cv: f64,
    /// Minimum |Pearson r| between two sub-series.
    pub correlation: f64,
    /// Minimum |Spearman rho| between two sub-series.
    pub dependence: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            dominance: 0.5,
            top2: 0.7,
            outlier_z: 3.0,
            trend_r: 0.7,
            skewness: 1.0,
            kurtosis: 1.0,
            evenness_cv: 0.1,
            correlation: 0.7,
            dependence: 0.8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExtractionConfig {
    pub thresholds: Thresholds,
    /// Per-type minimum series length, overriding the built-in minimums.
    pub min_series_length: BTreeMap<InsightType, usize>,
    pub aggregates: Vec<Aggregate>,
    /// Measures to analyse; empty means every numerical column.
    pub measures: Vec<String>,
    pub max_locator_length: usize,
    /// Pair sub-series over every eligible split dimension instead of only
    /// the first one.
    pub compound_all_pairs: bool,
    /// Multiply scores by the subspace's share of the table total.
    pub impact_weighting: bool,
    /// Restrict extraction to these types; empty means all registered.
    pub types: Vec<InsightType>,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        ExtractionConfig {
            thresholds: Thresholds::default(),
            min_series_length: BTreeMap::new(),
            aggregates: vec![Aggregate::Sum],
            measures: Vec::new(),
            max_locator_length: 3,
            compound_all_pairs: false,
            impact_weighting: false,
            types: Vec::new(),
        }
    }
}

impl ExtractionConfig {
    pub fn validate(&self) -> Result<()> {
        let t = &self.thresholds;
        let unit = [
            ("dominance", t.dominance),
            ("top2", t.top2),
            ("trend_r", t.trend_r),
            ("correlation", t.correlation),
            ("dependence", t.dependence),
        ];
        for (name, v) in unit {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("threshold {name} = {v} is outside [0, 1]")));
            }
        }
        let positive = [
            ("outlier_z", t.outlier_z),
            ("skewness", t.skewness),
            ("kurtosis", t.kurtosis),
            ("evenness_cv", t.evenness_cv),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("threshold {name} = {v} must be positive")));
            }
        }
        if self.aggregates.is_empty() {
            return Err(Error::Config("aggregate set is empty".into()));
        }
        Ok(())
    }

    pub fn min_length(&self, itype: InsightType) -> usize {
        self.min_series_length
            .get(&itype)
            .copied()
            .unwrap_or_else(|| itype.default_min_length())
    }

    /// The lowest score an emitted insight of `itype` can carry: the
    /// detection threshold mapped through the type's score function.
    pub fn score_floor(&self, itype: InsightType) -> f64 {
        let t = &self.thresholds;
        match itype {
            InsightType::Dominance => t.dominance,
            InsightType::Top2 => t.top2,
            InsightType::Outlier | InsightType::OutstandingNegative => (t.outlier_z / 6.0).min(1.0),
            InsightType::Trend => t.trend_r * t.trend_r,
            InsightType::Skewness => (t.skewness / 3.0).min(1.0),
            InsightType::Kurtosis => (t.kurtosis / 5.0).min(1.0),
            InsightType::Evenness => 0.0,
            InsightType::TemporalCorrelation | InsightType::LinearCorrelation => t.correlation,
            InsightType::Dependence => t.dependence,
        }
    }

    pub fn measures_for(&self, schema: &Schema) -> Vec<String> {
        if self.measures.is_empty() {
            schema.measures().into_iter().map(str::to_owned).collect()
        } else {
            let mut m: Vec<String> = self
                .measures
                .iter()
                .filter(|m| schema.is_numerical(m))
                .cloned()
                .collect();
            m.sort();
            m.dedup();
            m
        }
    }

    pub fn aggregate_set(&self) -> Vec<Aggregate> {
        let mut a = self.aggregates.clone();
        a.sort();
        a.dedup();
        a
    }

    pub fn type_enabled(&self, itype: InsightType) -> bool {
        self.types.is_empty() || self.types.contains(&itype)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        ExtractionConfig::default().validate().unwrap();
    }

    #[test]
    fn rejects_out_of_range() {
        let mut c = ExtractionConfig::default();
        c.thresholds.dominance = 1.5;
        assert!(c.validate().is_err());
        let mut c = ExtractionConfig::default();
        c.thresholds.evenness_cv = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn floors() {
        let c = ExtractionConfig::default();
        assert_eq!(c.score_floor(InsightType::Outlier), 0.5);
        assert!((c.score_floor(InsightType::Trend) - 0.49).abs() < 1e-12);
        assert_eq!(c.score_floor(InsightType::Evenness), 0.0);
    }

    #[test]
    fn partial_toml_uses_defaults() {
        let c: ExtractionConfig = toml::from_str("max_locator_length = 2\n[thresholds]\ndominance = 0.6\n").unwrap();
        assert_eq!(c.max_locator_length, 2);
        assert_eq!(c.thresholds.dominance, 0.6);
        assert_eq!(c.thresholds.top2, 0.7);
        assert_eq!(c.aggregates, vec![Aggregate::Sum]);
    }
}
