//! Small statistics helpers: Wilson intervals, two-sample KS, batch means, split-R̂.

use serde::Serialize;

/// z_{0.975}
pub const Z95: f64 = 1.959_963_984_540_054;

/// c(α) for the two-sample KS critical value at α = 0.01.
pub const KS_C_001: f64 = 1.628;

/// Wilson score interval for k successes in n trials.
pub fn wilson(k: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    let lo = if k == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if k == n { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub critical: f64,
    pub passed: bool,
}

/// Two-sample Kolmogorov–Smirnov statistic sup |F_a − F_b|.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < x.len() && j < y.len() {
        let t = x[i].min(y[j]);
        while i < x.len() && x[i] <= t {
            i += 1;
        }
        while j < y.len() && y[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

pub fn ks_two_sample(a: &[f64], b: &[f64], c_alpha: f64) -> KsResult {
    let (n, m) = (a.len() as f64, b.len() as f64);
    let statistic = ks_statistic(a, b);
    let critical = c_alpha * ((n + m) / (n * m)).sqrt();
    KsResult {
        statistic,
        critical,
        passed: statistic <= critical,
    }
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

pub fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() as f64 - 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

/// Batch-means estimate with `batches` contiguous batches (leftover samples dropped from the front).
pub fn batch_means(x: &[f64], batches: usize) -> Estimate {
    let b = batches.max(2).min(x.len());
    let size = x.len() / b;
    if size == 0 {
        return Estimate {
            mean: mean(x),
            se: f64::NAN,
        };
    }
    let skip = x.len() - size * b;
    let bm: Vec<f64> = x[skip..].chunks(size).map(mean).collect();
    Estimate {
        mean: mean(&x[skip..]),
        se: (variance(&bm) / b as f64).sqrt(),
    }
}

/// Split-R̂ over chains of equal length.
pub fn split_rhat(chains: &[Vec<f64>]) -> f64 {
    let mut halves: Vec<&[f64]> = Vec::new();
    for c in chains {
        let h = c.len() / 2;
        halves.push(&c[..h]);
        halves.push(&c[c.len() - h..]);
    }
    let n = halves.iter().map(|h| h.len()).min().unwrap_or(0);
    if n < 2 || halves.len() < 2 {
        return f64::NAN;
    }
    let means: Vec<f64> = halves.iter().map(|h| mean(&h[..n])).collect();
    let w = mean(&halves.iter().map(|h| variance(&h[..n])).collect::<Vec<_>>());
    let b = n as f64 * variance(&means);
    if w == 0.0 {
        return if b == 0.0 { 1.0 } else { f64::INFINITY };
    }
    let var = (n as f64 - 1.0) / n as f64 * w + b / n as f64;
    (var / w).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_contains_p() {
        let (lo, hi) = wilson(30, 100, Z95);
        assert!(lo < 0.3 && 0.3 < hi);
        let (lo, hi) = wilson(0, 100, Z95);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.05);
    }

    #[test]
    fn ks_identical_and_shifted() {
        let a: Vec<f64> = (0..100).map(|i| i as f64).collect();
        assert_eq!(ks_statistic(&a, &a), 0.0);
        let b: Vec<f64> = a.iter().map(|v| v + 50.0).collect();
        assert!((ks_statistic(&a, &b) - 0.5).abs() < 1e-12);
        assert!(!ks_two_sample(&a, &b, KS_C_001).passed);
    }

    #[test]
    fn batch_means_constant() {
        let e = batch_means(&[2.0; 100], 10);
        assert_eq!(e.mean, 2.0);
        assert_eq!(e.se, 0.0);
    }

    #[test]
    fn rhat_identical_chains() {
        let c: Vec<f64> = (0..200).map(|i| ((i * 37) % 11) as f64).collect();
        let r = split_rhat(&[c.clone(), c]);
        assert!((r - 1.0).abs() < 0.05);
    }
}
