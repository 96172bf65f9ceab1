//! Descriptive statistics shared by the detectors.

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn is_constant(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] == w[1])
}

/// Central moment of order `k` (population normalisation).
pub fn central_moment(v: &[f64], k: i32) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m).powi(k)).sum::<f64>() / v.len() as f64
}

pub fn population_std(v: &[f64]) -> f64 {
    central_moment(v, 2).sqrt()
}

pub fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]) / 2.0
    }
}

/// Scale used for robust z-scores: `1.4826 * MAD`, or `1.253314 * mean
/// absolute deviation` around the median when the MAD is zero. `None` when
/// both are zero.
pub fn robust_scale(v: &[f64]) -> Option<(f64, f64)> {
    let med = median(v);
    let dev: Vec<f64> = v.iter().map(|x| (x - med).abs()).collect();
    let mad = median(&dev);
    if mad > 0.0 {
        return Some((med, 1.4826 * mad));
    }
    let mean_ad = mean(&dev);
    (mean_ad > 0.0).then(|| (med, 1.253314 * mean_ad))
}

/// Pearson correlation; `None` when either input is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    if is_constant(x) || is_constant(y) {
        return None;
    }
    let (mx, my) = (mean(x), mean(y));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Ranks starting at 1, ties receiving their average rank.
pub fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Adjusted Fisher-Pearson skewness `G1`. Needs at least three values and
/// non-zero variance.
pub fn adjusted_skewness(v: &[f64]) -> Option<f64> {
    let n = v.len() as f64;
    if v.len() < 3 || is_constant(v) {
        return None;
    }
    let g1 = central_moment(v, 3) / central_moment(v, 2).powf(1.5);
    Some(g1 * (n * (n - 1.0)).sqrt() / (n - 2.0))
}

/// Adjusted sample excess kurtosis `G2`. Needs at least four values and
/// non-zero variance.
pub fn adjusted_excess_kurtosis(v: &[f64]) -> Option<f64> {
    let n = v.len() as f64;
    if v.len() < 4 || is_constant(v) {
        return None;
    }
    let m2 = central_moment(v, 2);
    let g2 = central_moment(v, 4) / (m2 * m2) - 3.0;
    Some((n - 1.0) / ((n - 2.0) * (n - 3.0)) * ((n + 1.0) * g2 + 6.0))
}

/// Index of the first maximum under `key`.
pub fn argmax_by<F: Fn(f64) -> f64>(v: &[f64], key: F) -> usize {
    let mut best = 0;
    for i in 1..v.len() {
        if key(v[i]) > key(v[best]) {
            best = i;
        }
    }
    best
}
