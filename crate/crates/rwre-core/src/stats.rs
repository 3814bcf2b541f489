//! Monte Carlo post-processing: point estimates with confidence intervals,
//! quantiles, and the goodness-of-fit machinery used by the verification
//! suites (Kolmogorov-Smirnov, two-sample chi-square with pooling, a
//! permutation test for serial independence, and a Hill tail-index estimate).

use std::collections::BTreeMap;

use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

/// A Monte Carlo point estimate with its replicate-level uncertainty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateWithCI {
    pub point: f64,
    pub stderr: f64,
    pub ci95: (f64, f64),
    pub replicates: u64,
    pub seed: u64,
}

impl EstimateWithCI {
    pub fn from_samples(samples: &[f64], seed: u64) -> Self {
        let n = samples.len();
        assert!(n > 0, "estimate from empty sample");
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        let stderr = (var / n as f64).sqrt();
        EstimateWithCI {
            point: mean,
            stderr,
            ci95: (mean - 1.96 * stderr, mean + 1.96 * stderr),
            replicates: n as u64,
            seed,
        }
    }

    /// Estimate of a probability from a hit count (binomial standard error).
    pub fn from_hits(hits: u64, trials: u64, seed: u64) -> Self {
        assert!(trials > 0);
        let p = hits as f64 / trials as f64;
        let stderr = (p * (1.0 - p) / trials as f64).sqrt();
        EstimateWithCI {
            point: p,
            stderr,
            ci95: (p - 1.96 * stderr, p + 1.96 * stderr),
            replicates: trials,
            seed,
        }
    }

    /// Two-sided interval at an arbitrary normal quantile (2.5758 for 99%).
    pub fn ci(&self, z: f64) -> (f64, f64) {
        (self.point - z * self.stderr, self.point + z * self.stderr)
    }
}

/// 99% two-sided normal quantile.
pub const Z99: f64 = 2.575_829_303_548_901;

/// Linear-interpolation quantile of an unsorted sample.
pub fn quantile(samples: &[f64], q: f64) -> f64 {
    assert!(!samples.is_empty());
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

/// `(q25, median, q75)`.
pub fn quartiles(samples: &[f64]) -> (f64, f64, f64) {
    (
        quantile(samples, 0.25),
        quantile(samples, 0.5),
        quantile(samples, 0.75),
    )
}

/// One-sample Kolmogorov-Smirnov statistic against a reference CDF.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut sup: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        let upper = (i + 1) as f64 / n - f;
        let lower = f - i as f64 / n;
        sup = sup.max(upper).max(lower);
    }
    sup
}

/// Asymptotic Kolmogorov-Smirnov critical value at the 1% level.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.627_62 / (n as f64).sqrt()
}

/// Outcome of the two-sample chi-square homogeneity test.
#[derive(Debug, Clone)]
pub struct ChiSquareOutcome {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Number of cells after pooling, including the pooled bucket if any.
    pub cells: usize,
    /// `(label, count_a, count_b)` after pooling; the pooled bucket is
    /// labelled `"<pooled>"`.
    pub table: Vec<(String, u64, u64)>,
}

/// Two-sample chi-square test of homogeneity over categorical counts.
///
/// Cells whose expected count in either sample falls below 5 are pooled
/// (smallest first) into one bucket; fails with `InsufficientSamples` if the
/// pooled bucket itself stays below 5 or fewer than two cells remain.
pub fn chi_square_homogeneity(
    counts_a: &BTreeMap<String, u64>,
    counts_b: &BTreeMap<String, u64>,
) -> Result<ChiSquareOutcome> {
    let mut labels: Vec<String> = counts_a.keys().chain(counts_b.keys()).cloned().collect();
    labels.sort();
    labels.dedup();
    let total_a: u64 = counts_a.values().sum();
    let total_b: u64 = counts_b.values().sum();
    if total_a == 0 || total_b == 0 {
        return Err(Error::InsufficientSamples("empty sample".into()));
    }
    let grand = (total_a + total_b) as f64;
    let share_a = total_a as f64 / grand;
    let share_b = total_b as f64 / grand;

    let mut cells: Vec<(String, u64, u64)> = labels
        .into_iter()
        .map(|l| {
            let a = counts_a.get(&l).copied().unwrap_or(0);
            let b = counts_b.get(&l).copied().unwrap_or(0);
            (l, a, b)
        })
        .collect();
    // Pool smallest cells until every remaining expected count is >= 5.
    cells.sort_by_key(|&(_, a, b)| a + b);
    let min_expected = |a: u64, b: u64| {
        let tot = (a + b) as f64;
        (tot * share_a).min(tot * share_b)
    };
    let mut pooled: Option<(u64, u64)> = None;
    let mut kept: Vec<(String, u64, u64)> = Vec::new();
    for (label, a, b) in cells {
        let needs_pool = min_expected(a, b) < 5.0;
        let still_filling = pooled.map(|(pa, pb)| min_expected(pa, pb) < 5.0).unwrap_or(false);
        if needs_pool || still_filling {
            let (pa, pb) = pooled.unwrap_or((0, 0));
            pooled = Some((pa + a, pb + b));
        } else {
            kept.push((label, a, b));
        }
    }
    if let Some((pa, pb)) = pooled {
        if min_expected(pa, pb) < 5.0 {
            return Err(Error::InsufficientSamples(format!(
                "pooled bucket expected count below 5 ({pa} + {pb} observations)"
            )));
        }
        kept.push(("<pooled>".into(), pa, pb));
    }
    if kept.len() < 2 {
        return Err(Error::InsufficientSamples(format!(
            "only {} cell(s) after pooling",
            kept.len()
        )));
    }
    kept.sort_by(|x, y| x.0.cmp(&y.0));

    let mut statistic = 0.0;
    for &(_, a, b) in &kept {
        let tot = (a + b) as f64;
        let ea = tot * share_a;
        let eb = tot * share_b;
        statistic += (a as f64 - ea) * (a as f64 - ea) / ea;
        statistic += (b as f64 - eb) * (b as f64 - eb) / eb;
    }
    let dof = kept.len() - 1;
    let chi = ChiSquared::new(dof as f64).expect("dof >= 1");
    let p_value = chi.sf(statistic);
    Ok(ChiSquareOutcome { statistic, dof, p_value, cells: kept.len(), table: kept })
}

/// Lag-1 autocorrelation.
pub fn lag1_autocorrelation(series: &[f64]) -> f64 {
    let n = series.len();
    assert!(n >= 3);
    let mean = series.iter().sum::<f64>() / n as f64;
    let var: f64 = series.iter().map(|x| (x - mean) * (x - mean)).sum();
    if var == 0.0 {
        return 0.0;
    }
    let cov: f64 = series
        .windows(2)
        .map(|w| (w[0] - mean) * (w[1] - mean))
        .sum();
    cov / var
}

/// Permutation test for serial independence: p-value of the observed lag-1
/// autocorrelation magnitude under random shuffles.
pub fn permutation_pvalue_lag1<R: Rng + ?Sized>(
    series: &[f64],
    shuffles: usize,
    rng: &mut R,
) -> f64 {
    let observed = lag1_autocorrelation(series).abs();
    let mut work = series.to_vec();
    let mut at_least = 1usize; // the identity permutation counts
    for _ in 0..shuffles {
        // Fisher-Yates.
        for i in (1..work.len()).rev() {
            let j = rng.random_range(0..=i);
            work.swap(i, j);
        }
        if lag1_autocorrelation(&work).abs() >= observed {
            at_least += 1;
        }
    }
    at_least as f64 / (shuffles + 1) as f64
}

/// Hill estimator of the tail index from the top `k` order statistics.
pub fn hill_tail_index(samples: &[f64], k: usize) -> f64 {
    assert!(k >= 1 && k < samples.len());
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let threshold = sorted[n - k - 1];
    let mean_log_excess: f64 = sorted[n - k..]
        .iter()
        .map(|&x| (x / threshold).ln())
        .sum::<f64>()
        / k as f64;
    1.0 / mean_log_excess
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::rng_from_key;
    use rand::Rng;

    #[test]
    fn estimate_invariants() {
        let e = EstimateWithCI::from_samples(&[1.0, 2.0, 3.0, 4.0], 7);
        assert!((e.point - 2.5).abs() < 1e-15);
        assert!(e.stderr >= 0.0);
        assert!((e.ci95.0 - (e.point - 1.96 * e.stderr)).abs() < 1e-12);
        assert!((e.ci95.1 - (e.point + 1.96 * e.stderr)).abs() < 1e-12);
        assert_eq!(e.replicates, 4);
    }

    #[test]
    fn quantiles_of_known_sample() {
        let xs: Vec<f64> = (1..=101).map(|i| i as f64).collect();
        let (q1, med, q3) = quartiles(&xs);
        assert_eq!(med, 51.0);
        assert_eq!(q1, 26.0);
        assert_eq!(q3, 76.0);
    }

    #[test]
    fn ks_accepts_uniform_rejects_shifted() {
        let mut rng = rng_from_key(3);
        let samples: Vec<f64> = (0..20_000).map(|_| rng.random::<f64>()).collect();
        let d_ok = ks_statistic(&samples, |x| x.clamp(0.0, 1.0));
        assert!(d_ok < ks_critical_1pct(samples.len()));
        let d_bad = ks_statistic(&samples, |x| (x * x).clamp(0.0, 1.0));
        assert!(d_bad > ks_critical_1pct(samples.len()));
    }

    #[test]
    fn chi_square_detects_shifted_multinomial() {
        let mut rng = rng_from_key(5);
        let mut a = BTreeMap::new();
        let mut b = BTreeMap::new();
        for _ in 0..10_000 {
            let u: f64 = rng.random();
            let ka = if u < 0.5 { "x" } else { "y" };
            *a.entry(ka.to_string()).or_insert(0) += 1;
            let v: f64 = rng.random();
            let kb = if v < 0.6 { "x" } else { "y" };
            *b.entry(kb.to_string()).or_insert(0) += 1;
        }
        let out = chi_square_homogeneity(&a, &b).unwrap();
        assert!(out.p_value < 1e-6, "p = {}", out.p_value);

        // Same distribution: comfortably accepted.
        let mut c = BTreeMap::new();
        for _ in 0..10_000 {
            let u: f64 = rng.random();
            let k = if u < 0.5 { "x" } else { "y" };
            *c.entry(k.to_string()).or_insert(0) += 1;
        }
        let out = chi_square_homogeneity(&a, &c).unwrap();
        assert!(out.p_value > 0.01, "p = {}", out.p_value);
    }

    #[test]
    fn chi_square_pools_rare_cells() {
        let mut a = BTreeMap::new();
        let mut b = BTreeMap::new();
        a.insert("common".into(), 1000u64);
        b.insert("common".into(), 1000u64);
        a.insert("other".into(), 1000u64);
        b.insert("other".into(), 1000u64);
        for i in 0..20 {
            a.insert(format!("rare{i}"), 1u64);
        }
        let out = chi_square_homogeneity(&a, &b).unwrap();
        assert!(out.table.iter().any(|(l, _, _)| l == "<pooled>"));
        assert!(out.cells <= 3);
    }

    #[test]
    fn chi_square_insufficient() {
        let mut a = BTreeMap::new();
        let mut b = BTreeMap::new();
        a.insert("x".into(), 3u64);
        b.insert("x".into(), 2u64);
        assert!(matches!(
            chi_square_homogeneity(&a, &b),
            Err(Error::InsufficientSamples(_))
        ));
    }

    #[test]
    fn permutation_test_accepts_iid_rejects_trend() {
        let mut rng = rng_from_key(9);
        let iid: Vec<f64> = (0..400).map(|_| rng.random::<f64>()).collect();
        let p_iid = permutation_pvalue_lag1(&iid, 500, &mut rng);
        assert!(p_iid > 0.01, "p = {p_iid}");
        let trended: Vec<f64> = (0..400)
            .map(|i| (i as f64 / 40.0).sin() + 0.1 * rng.random::<f64>())
            .collect();
        let p_trend = permutation_pvalue_lag1(&trended, 500, &mut rng);
        assert!(p_trend < 0.01, "p = {p_trend}");
    }

    #[test]
    fn hill_estimates_pareto_index() {
        let mut rng = rng_from_key(13);
        let gamma = 1.5;
        let samples: Vec<f64> = (0..100_000)
            .map(|_| (1.0 - rng.random::<f64>()).powf(-1.0 / gamma))
            .collect();
        let est = hill_tail_index(&samples, 2_000);
        assert!((est - gamma).abs() < 0.12, "estimated {est}, true {gamma}");
    }
}
