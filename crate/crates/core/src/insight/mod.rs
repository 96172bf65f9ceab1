//! Insight taxonomy, detectors and catalog extraction.
//!
//! Eleven insight types in three categories. Each type is implemented by a
//! detector behind [`SeriesDetector`] or [`PairDetector`] and registered by
//! name in a [`DetectorRegistry`]; extraction runs every enabled detector
//! over every analysis entity of the subspace lattice.

mod catalog;
mod config;
mod detectors;
mod extract;
mod registry;
pub mod stats;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::table::{AnalysisEntity, Series};

pub use catalog::{Diagnostics, InsightCatalog, CATALOG_SCHEMA};
pub use config::{ExtractionConfig, Thresholds};
pub use detectors::{
    CorrelationDetector, DependenceDetector, DominanceDetector, EvennessDetector, KurtosisDetector,
    OutlierDetector, OutstandingNegativeDetector, SkewnessDetector, Top2Detector, TrendDetector,
};
pub use extract::{
    detect_compound_insights, detect_point_insights, detect_shape_insights, extract_all,
    extract_with, insight_id,
};
pub use registry::{DetectorRegistry, PairDetector, SeriesDetector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Point,
    Shape,
    Compound,
}

impl Category {
    pub const ALL: [Category; 3] = [Category::Point, Category::Shape, Category::Compound];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Point => "point",
            Category::Shape => "shape",
            Category::Compound => "compound",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InsightType {
    Dominance,
    Top2,
    Outlier,
    OutstandingNegative,
    Trend,
    Skewness,
    Kurtosis,
    Evenness,
    TemporalCorrelation,
    LinearCorrelation,
    Dependence,
}

impl InsightType {
    pub const ALL: [InsightType; 11] = [
        InsightType::Dominance,
        InsightType::Top2,
        InsightType::Outlier,
        InsightType::OutstandingNegative,
        InsightType::Trend,
        InsightType::Skewness,
        InsightType::Kurtosis,
        InsightType::Evenness,
        InsightType::TemporalCorrelation,
        InsightType::LinearCorrelation,
        InsightType::Dependence,
    ];

    pub fn category(self) -> Category {
        use InsightType::*;
        match self {
            Dominance | Top2 | Outlier | OutstandingNegative => Category::Point,
            Trend | Skewness | Kurtosis | Evenness => Category::Shape,
            TemporalCorrelation | LinearCorrelation | Dependence => Category::Compound,
        }
    }

    pub fn as_str(self) -> &'static str {
        use InsightType::*;
        match self {
            Dominance => "dominance",
            Top2 => "top2",
            Outlier => "outlier",
            OutstandingNegative => "outstanding_negative",
            Trend => "trend",
            Skewness => "skewness",
            Kurtosis => "kurtosis",
            Evenness => "evenness",
            TemporalCorrelation => "temporal_correlation",
            LinearCorrelation => "linear_correlation",
            Dependence => "dependence",
        }
    }

    pub(crate) fn default_min_length(self) -> usize {
        use InsightType::*;
        match self {
            Dominance | Top2 | Outlier | OutstandingNegative | Trend => 3,
            _ => 4,
        }
    }
}

impl fmt::Display for InsightType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InsightType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        InsightType::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown insight type `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Rising,
    Falling,
    Above,
    Below,
    Right,
    Left,
    Positive,
    Negative,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Rising => "rising",
            Direction::Falling => "falling",
            Direction::Above => "above",
            Direction::Below => "below",
            Direction::Right => "right",
            Direction::Left => "left",
            Direction::Positive => "positive",
            Direction::Negative => "negative",
        }
    }
}

/// Which two sub-series a compound insight compares.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SplitPair {
    pub dimension: String,
    pub first: String,
    pub second: String,
}

/// Two sub-series of one entity, split by an additional dimension and
/// aligned on the breakdown labels.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesPair {
    pub a: Series,
    pub b: Series,
    pub split: SplitPair,
}

/// Type-specific payload of an insight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Highlight {
    Dominance {
        label: String,
        index: usize,
        share: f64,
        /// Shares were computed on absolute values because of negatives.
        abs_share: bool,
    },
    Top2 {
        labels: [String; 2],
        indices: [usize; 2],
        share: f64,
        abs_share: bool,
    },
    Outlier {
        label: String,
        index: usize,
        value: f64,
        z: f64,
        direction: Direction,
    },
    OutstandingNegative {
        label: String,
        index: usize,
        value: f64,
        z: f64,
    },
    Trend {
        direction: Direction,
        r: f64,
        first: String,
        last: String,
    },
    Skewness {
        direction: Direction,
        skewness: f64,
        label: String,
    },
    Kurtosis {
        kurtosis: f64,
        label: String,
    },
    Evenness {
        cv: f64,
    },
    Correlation {
        split: SplitPair,
        r: f64,
        direction: Direction,
    },
    Dependence {
        split: SplitPair,
        rho: f64,
        direction: Direction,
    },
}

impl Highlight {
    /// Part of the highlight that identifies the insight; numeric detail is
    /// left out so the key is stable under rescaling.
    pub fn key(&self) -> String {
        match self {
            Highlight::Dominance { label, .. } => label.clone(),
            Highlight::Top2 { labels, .. } => format!("{}|{}", labels[0], labels[1]),
            Highlight::Outlier { label, direction, .. } => format!("{label}|{}", direction.as_str()),
            Highlight::OutstandingNegative { label, .. } => label.clone(),
            Highlight::Trend { direction, .. } => direction.as_str().to_owned(),
            Highlight::Skewness { direction, .. } => direction.as_str().to_owned(),
            Highlight::Kurtosis { .. } | Highlight::Evenness { .. } => String::new(),
            Highlight::Correlation { split, direction, .. }
            | Highlight::Dependence { split, direction, .. } => format!(
                "{}|{}|{}|{}",
                split.dimension,
                split.first,
                split.second,
                direction.as_str()
            ),
        }
    }
}

/// Output of a single detector before it is attached to an entity.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub itype: InsightType,
    pub score: f64,
    pub highlight: Highlight,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Insight {
    pub id: String,
    pub ae: AnalysisEntity,
    pub category: Category,
    pub itype: InsightType,
    pub score: f64,
    pub highlight: Highlight,
    pub series: Series,
    /// Second sub-series of a compound insight.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series_b: Option<Series>,
}
