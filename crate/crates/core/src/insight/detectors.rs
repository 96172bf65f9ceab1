//! The built-in detectors, one per insight type.

use super::registry::{PairDetector, SeriesDetector};
use super::stats;
use super::{Detection, Direction, ExtractionConfig, Highlight, InsightType, SeriesPair};
use crate::table::Series;

/// Values used for share computations: absolute values when any value is
/// negative.
fn share_base(series: &Series) -> (Vec<f64>, bool) {
    let abs = series.values.iter().any(|v| *v < 0.0);
    let base = if abs {
        series.values.iter().map(|v| v.abs()).collect()
    } else {
        series.values.clone()
    };
    (base, abs)
}

pub struct DominanceDetector;

impl SeriesDetector for DominanceDetector {
    fn itype(&self) -> InsightType {
        InsightType::Dominance
    }

    fn detect(&self, series: &Series, cfg: &ExtractionConfig) -> Option<Detection> {
        let (base, abs_share) = share_base(series);
        let total: f64 = base.iter().sum();
        if total <= 0.0 {
            return None;
        }
        let i = stats::argmax_by(&base, |v| v);
        let share = base[i] / total;
        (share >= cfg.thresholds.dominance).then(|| Detection {
            itype: InsightType::Dominance,
            score: share,
            highlight: Highlight::Dominance {
                label: series.labels[i].clone(),
                index: i,
                share,
                abs_share,
            },
        })
    }
}

pub struct Top2Detector;

impl SeriesDetector for Top2Detector {
    fn itype(&self) -> InsightType {
        InsightType::Top2
    }

    fn suppressed_by(&self) -> &[InsightType] {
        &[InsightType::Dominance]
    }

    fn detect(&self, series: &Series, cfg: &ExtractionConfig) -> Option<Detection> {
        let (base, abs_share) = share_base(series);
        let total: f64 = base.iter().sum();
        if total <= 0.0 || base.len() < 2 {
            return None;
        }
        let mut order: Vec<usize> = (0..base.len()).collect();
        order.sort_by(|&a, &b| base[b].total_cmp(&base[a]).then(a.cmp(&b)));
        let (i, j) = (order[0], order[1]);
        let share = (base[i] + base[j]) / total;
        (share >= cfg.thresholds.top2).then(|| Detection {
            itype: InsightType::Top2,
            score: share,
            highlight: Highlight::Top2 {
                labels: [series.labels[i].clone(), series.labels[j].clone()],
                indices: [i, j],
                share,
                abs_share,
            },
        })
    }
}

/// Robust z-scores `(x - median) / scale`, see [`stats::robust_scale`].
fn robust_z(values: &[f64]) -> Option<Vec<f64>> {
    let (med, scale) = stats::robust_scale(values)?;
    Some(values.iter().map(|x| (x - med) / scale).collect())
}

fn z_score(z: f64) -> f64 {
    (z.abs() / 6.0).min(1.0)
}

pub struct OutlierDetector;

impl SeriesDetector for OutlierDetector {
    fn itype(&self) -> InsightType {
        InsightType::Outlier
    }

    fn detect(&self, series: &Series, cfg: &ExtractionConfig) -> Option<Detection> {
        let z = robust_z(&series.values)?;
        let i = stats::argmax_by(&z, f64::abs);
        (z[i].abs() >= cfg.thresholds.outlier_z).then(|| Detection {
            itype: InsightType::Outlier,
            score: z_score(z[i]),
            highlight: Highlight::Outlier {
                label: series.labels[i].clone(),
                index: i,
                value: series.values[i],
                z: z[i],
                direction: if z[i] > 0.0 { Direction::Above } else { Direction::Below },
            },
        })
    }
}

/// The minimum stands out either by being the only negative value or by a
/// robust z-score at or below `-outlier_z`. In the sign-only case the score
/// is floored at the outlier threshold's score.
pub struct OutstandingNegativeDetector;

impl SeriesDetector for OutstandingNegativeDetector {
    fn itype(&self) -> InsightType {
        InsightType::OutstandingNegative
    }

    fn detect(&self, series: &Series, cfg: &ExtractionConfig) -> Option<Detection> {
        let v = &series.values;
        let i = stats::argmax_by(v, |x| -x);
        let z = robust_z(v)?[i];
        let t = cfg.thresholds.outlier_z;
        let lone_negative =
            v[i] < 0.0 && v.iter().enumerate().all(|(k, x)| k == i || *x >= 0.0);
        if !(lone_negative || z <= -t) {
            return None;
        }
        Some(Detection {
            itype: InsightType::OutstandingNegative,
            score: z_score(z.abs().max(t)),
            highlight: Highlight::OutstandingNegative {
                label: series.labels[i].clone(),
                index: i,
                value: v[i],
                z,
            },
        })
    }
}

pub struct TrendDetector;

impl SeriesDetector for TrendDetector {
    fn itype(&self) -> InsightType {
        InsightType::Trend
    }

    fn detect(&self, series: &Series, cfg: &ExtractionConfig) -> Option<Detection> {
        if !series.ordinal {
            return None;
        }
        let positions: Vec<f64> = (0..series.len()).map(|i| i as f64).collect();
        let r = stats::pearson(&positions, &series.values)?;
        (r.abs() >= cfg.thresholds.trend_r).then(|| Detection {
            itype: InsightType::Trend,
            score: r * r,
            highlight: Highlight::Trend {
                direction: if r > 0.0 { Direction::Rising } else { Direction::Falling },
                r,
                first: series.labels[0].clone(),
                last: series.labels[series.len() - 1].clone(),
            },
        })
    }
}

/// Label of the value farthest from the mean.
fn extreme_label(series: &Series) -> String {
    let m = stats::mean(&series.values);
    let i = stats::argmax_by(&series.values, |x| (x - m).abs());
    series.labels[i].clone()
}

pub struct SkewnessDetector;

impl SeriesDetector for SkewnessDetector {
    fn itype(&self) -> InsightType {
        InsightType::Skewness
    }

    fn detect(&self, series: &Series, cfg: &ExtractionConfig) -> Option<Detection> {
        let g1 = stats::adjusted_skewness(&series.values)?;
        (g1.abs() >= cfg.thresholds.skewness).then(|| Detection {
            itype: InsightType::Skewness,
            score: (g1.abs() / 3.0).min(1.0),
            highlight: Highlight::Skewness {
                direction: if g1 > 0.0 { Direction::Right } else { Direction::Left },
                skewness: g1,
                label: extreme_label(series),
            },
        })
    }
}

pub struct KurtosisDetector;

impl SeriesDetector for KurtosisDetector {
    fn itype(&self) -> InsightType {
        InsightType::Kurtosis
    }

    fn detect(&self, series: &Series, cfg: &ExtractionConfig) -> Option<Detection> {
        let g2 = stats::adjusted_excess_kurtosis(&series.values)?;
        (g2 >= cfg.thresholds.kurtosis).then(|| Detection {
            itype: InsightType::Kurtosis,
            score: (g2 / 5.0).min(1.0),
            highlight: Highlight::Kurtosis {
                kurtosis: g2,
                label: extreme_label(series),
            },
        })
    }
}

pub struct EvennessDetector;

impl SeriesDetector for EvennessDetector {
    fn itype(&self) -> InsightType {
        InsightType::Evenness
    }

    fn detect(&self, series: &Series, cfg: &ExtractionConfig) -> Option<Detection> {
        let v = &series.values;
        let m = stats::mean(v);
        if m == 0.0 {
            return None;
        }
        let cv = if stats::is_constant(v) {
            0.0
        } else {
            stats::population_std(v) / m.abs()
        };
        let t = cfg.thresholds.evenness_cv;
        (cv <= t).then(|| Detection {
            itype: InsightType::Evenness,
            score: 1.0 - cv / t,
            highlight: Highlight::Evenness { cv },
        })
    }
}

fn sign(x: f64) -> Direction {
    if x >= 0.0 {
        Direction::Positive
    } else {
        Direction::Negative
    }
}

/// Pearson correlation between the two sub-series. The temporal variant
/// applies to ordinal breakdowns, the linear one to the rest.
pub struct CorrelationDetector {
    temporal: bool,
}

impl CorrelationDetector {
    pub fn temporal() -> Self {
        CorrelationDetector { temporal: true }
    }

    pub fn linear() -> Self {
        CorrelationDetector { temporal: false }
    }
}

impl PairDetector for CorrelationDetector {
    fn itype(&self) -> InsightType {
        if self.temporal {
            InsightType::TemporalCorrelation
        } else {
            InsightType::LinearCorrelation
        }
    }

    fn detect(&self, pair: &SeriesPair, cfg: &ExtractionConfig) -> Option<Detection> {
        if pair.a.ordinal != self.temporal {
            return None;
        }
        let r = stats::pearson(&pair.a.values, &pair.b.values)?;
        (r.abs() >= cfg.thresholds.correlation).then(|| Detection {
            itype: self.itype(),
            score: r.abs(),
            highlight: Highlight::Correlation {
                split: pair.split.clone(),
                r,
                direction: sign(r),
            },
        })
    }
}

/// Spearman rank correlation, reported only when neither Pearson-based type
/// fired.
pub struct DependenceDetector;

impl PairDetector for DependenceDetector {
    fn itype(&self) -> InsightType {
        InsightType::Dependence
    }

    fn suppressed_by(&self) -> &[InsightType] {
        &[InsightType::TemporalCorrelation, InsightType::LinearCorrelation]
    }

    fn detect(&self, pair: &SeriesPair, cfg: &ExtractionConfig) -> Option<Detection> {
        let rho = stats::spearman(&pair.a.values, &pair.b.values)?;
        (rho.abs() >= cfg.thresholds.dependence).then(|| Detection {
            itype: InsightType::Dependence,
            score: rho.abs(),
            highlight: Highlight::Dependence {
                split: pair.split.clone(),
                rho,
                direction: sign(rho),
            },
        })
    }
}
