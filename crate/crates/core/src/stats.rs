//! Small statistics helpers for comparing discrete laws.

use std::collections::BTreeMap;

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + libm::erf(z / std::f64::consts::SQRT_2))
}

/// Normalizes nonnegative counts into a probability law.
pub fn empirical_law(counts: &BTreeMap<i64, u64>) -> BTreeMap<i64, f64> {
    let total: u64 = counts.values().sum();
    counts
        .iter()
        .map(|(&k, &c)| (k, c as f64 / total as f64))
        .collect()
}

/// Rescales a law to total mass one.
pub fn normalize(law: &BTreeMap<i64, f64>) -> BTreeMap<i64, f64> {
    let total: f64 = law.values().sum();
    law.iter().map(|(&k, &p)| (k, p / total)).collect()
}

/// Kolmogorov–Smirnov distance between two laws on the integers:
/// the largest gap between their distribution functions.
pub fn ks_distance(a: &BTreeMap<i64, f64>, b: &BTreeMap<i64, f64>) -> f64 {
    let mut keys: Vec<i64> = a.keys().chain(b.keys()).copied().collect();
    keys.sort_unstable();
    keys.dedup();
    let (mut fa, mut fb, mut worst) = (0.0, 0.0, 0.0f64);
    for k in keys {
        fa += a.get(&k).copied().unwrap_or(0.0);
        fb += b.get(&k).copied().unwrap_or(0.0);
        worst = worst.max((fa - fb).abs());
    }
    worst
}

pub fn mean(law: &BTreeMap<i64, f64>) -> f64 {
    let total: f64 = law.values().sum();
    law.iter().map(|(&k, &p)| k as f64 * p).sum::<f64>() / total
}
