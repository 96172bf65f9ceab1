use super::detectors::*;
use super::{Detection, ExtractionConfig, InsightType, SeriesPair};
use crate::table::Series;

/// Detector over a single aggregated series.
pub trait SeriesDetector: Send + Sync {
    fn itype(&self) -> InsightType;

    /// Types which, when already emitted for the same series, suppress this
    /// detector.
    fn suppressed_by(&self) -> &[InsightType] {
        &[]
    }

    fn detect(&self, series: &Series, cfg: &ExtractionConfig) -> Option<Detection>;
}

/// Detector over two aligned sub-series sharing one breakdown.
pub trait PairDetector: Send + Sync {
    fn itype(&self) -> InsightType;

    fn suppressed_by(&self) -> &[InsightType] {
        &[]
    }

    fn detect(&self, pair: &SeriesPair, cfg: &ExtractionConfig) -> Option<Detection>;
}

/// Name-keyed collection of detectors, run in registration order.
pub struct DetectorRegistry {
    series: Vec<Box<dyn SeriesDetector>>,
    pairs: Vec<Box<dyn PairDetector>>,
}

impl Default for DetectorRegistry {
    /// All eleven built-in detectors.
    fn default() -> Self {
        let mut r = DetectorRegistry::empty();
        r.register_series(Box::new(DominanceDetector));
        r.register_series(Box::new(Top2Detector));
        r.register_series(Box::new(OutlierDetector));
        r.register_series(Box::new(OutstandingNegativeDetector));
        r.register_series(Box::new(TrendDetector));
        r.register_series(Box::new(SkewnessDetector));
        r.register_series(Box::new(KurtosisDetector));
        r.register_series(Box::new(EvennessDetector));
        r.register_pair(Box::new(CorrelationDetector::temporal()));
        r.register_pair(Box::new(CorrelationDetector::linear()));
        r.register_pair(Box::new(DependenceDetector));
        r
    }
}

impl DetectorRegistry {
    pub fn empty() -> Self {
        DetectorRegistry {
            series: Vec::new(),
            pairs: Vec::new(),
        }
    }

    /// Adds a detector, replacing any earlier one for the same type.
    pub fn register_series(&mut self, d: Box<dyn SeriesDetector>) {
        self.series.retain(|x| x.itype() != d.itype());
        self.series.push(d);
    }

    pub fn register_pair(&mut self, d: Box<dyn PairDetector>) {
        self.pairs.retain(|x| x.itype() != d.itype());
        self.pairs.push(d);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.series
            .iter()
            .map(|d| d.itype().as_str())
            .chain(self.pairs.iter().map(|d| d.itype().as_str()))
            .collect()
    }

    pub fn series_detector(&self, name: &str) -> Option<&dyn SeriesDetector> {
        self.series
            .iter()
            .find(|d| d.itype().as_str() == name)
            .map(|d| d.as_ref())
    }

    pub fn pair_detector(&self, name: &str) -> Option<&dyn PairDetector> {
        self.pairs
            .iter()
            .find(|d| d.itype().as_str() == name)
            .map(|d| d.as_ref())
    }

    pub fn has_pair_detectors(&self, cfg: &ExtractionConfig) -> bool {
        self.pairs.iter().any(|d| cfg.type_enabled(d.itype()))
    }

    /// Runs the enabled series detectors whose type passes `filter`.
    pub fn run_series(
        &self,
        series: &Series,
        cfg: &ExtractionConfig,
        filter: impl Fn(InsightType) -> bool,
    ) -> Vec<Detection> {
        let mut out: Vec<Detection> = Vec::new();
        for d in &self.series {
            let t = d.itype();
            if !cfg.type_enabled(t) || !filter(t) || series.len() < cfg.min_length(t) {
                continue;
            }
            if d.suppressed_by().iter().any(|s| out.iter().any(|o| o.itype == *s)) {
                continue;
            }
            if let Some(det) = d.detect(series, cfg) {
                out.push(det);
            }
        }
        out
    }

    pub fn run_pairs(&self, pair: &SeriesPair, cfg: &ExtractionConfig) -> Vec<Detection> {
        let mut out: Vec<Detection> = Vec::new();
        for d in &self.pairs {
            let t = d.itype();
            if !cfg.type_enabled(t) || pair.a.len() < cfg.min_length(t) {
                continue;
            }
            if d.suppressed_by().iter().any(|s| out.iter().any(|o| o.itype == *s)) {
                continue;
            }
            if let Some(det) = d.detect(pair, cfg) {
                out.push(det);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_registry_has_all_types() {
        let r = DetectorRegistry::default();
        let mut names = r.names();
        names.sort_unstable();
        let mut all: Vec<_> = InsightType::ALL.iter().map(|t| t.as_str()).collect();
        all.sort_unstable();
        assert_eq!(names, all);
        assert!(r.series_detector("trend").is_some());
        assert!(r.pair_detector("dependence").is_some());
        assert!(r.series_detector("dependence").is_none());
    }

    #[test]
    fn registering_replaces() {
        let mut r = DetectorRegistry::default();
        r.register_series(Box::new(DominanceDetector));
        assert_eq!(r.names().len(), 11);
    }
}
