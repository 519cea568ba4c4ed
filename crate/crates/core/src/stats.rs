//! Nonparametric statistical machinery: paired and unpaired rank tests,
//! rank correlation, Bonferroni correction, and normalized median
//! differences.
//!
//! Test conventions (zero-difference handling, average ranks for ties,
//! tie-corrected variances, continuity correction, the exact/asymptotic
//! switch at n = 25) follow the widely used SciPy implementations; the unit
//! tests pin reference values computed with SciPy 1.15.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    /// sample sizes of the two inputs
    pub n: (usize, usize),
    /// set by the caller once a correction threshold is known
    pub significant_after_correction: bool,
}

fn std_normal_sf(z: f64) -> f64 {
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    1.0 - normal.cdf(z)
}

/// Average ranks (1-based) with ties sharing their mean rank.
pub fn ranks_average(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap().then(a.cmp(&b)));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j + 2) as f64 / 2.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Sum of t^3 - t over tied groups.
fn tie_term(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut acc = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        acc += t * t * t - t;
        i = j + 1;
    }
    acc
}

/// Exact null distribution of the doubled signed-rank statistic: counts of
/// sign assignments reaching each doubled-rank sum.
fn signed_rank_counts(doubled_ranks: &[u64]) -> Vec<f64> {
    let total: u64 = doubled_ranks.iter().sum();
    let mut counts = vec![0.0f64; total as usize + 1];
    counts[0] = 1.0;
    for &r in doubled_ranks {
        let r = r as usize;
        for s in (r..counts.len()).rev() {
            counts[s] += counts[s - r];
        }
    }
    counts
}

/// Paired Wilcoxon signed-rank test, two-sided. Zero differences are
/// dropped, tied absolute differences share average ranks, and the
/// statistic is the smaller of the positive- and negative-rank sums. Exact
/// enumeration for up to 25 non-zero differences, otherwise a normal
/// approximation with tie and continuity corrections.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<TestResult> {
    if a.len() != b.len() {
        return Err(Error::Config("wilcoxon needs equal-length samples".into()));
    }
    if a.is_empty() {
        return Err(Error::Config("wilcoxon needs non-empty samples".into()));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    let n = diffs.len();
    if n == 0 {
        return Ok(TestResult {
            statistic: 0.0,
            p_value: 1.0,
            n: (a.len(), b.len()),
            significant_after_correction: false,
        });
    }
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = ranks_average(&abs);
    let w_plus: f64 = ranks.iter().zip(&diffs).filter(|(_, d)| **d > 0.0).map(|(r, _)| r).sum();
    let total = n as f64 * (n as f64 + 1.0) / 2.0;
    let w_minus = total - w_plus;
    let statistic = w_plus.min(w_minus);

    let p_value = if n <= 25 {
        // ranks are half-integers at worst; double them into exact integers
        let doubled: Vec<u64> = ranks.iter().map(|r| (2.0 * r).round() as u64).collect();
        let counts = signed_rank_counts(&doubled);
        let assignments = 2.0f64.powi(n as i32);
        let t2 = (2.0 * statistic).round() as usize;
        let below: f64 = counts[..=t2.min(counts.len() - 1)].iter().sum();
        (2.0 * below / assignments).min(1.0)
    } else {
        let nf = n as f64;
        let mean = nf * (nf + 1.0) / 4.0;
        let mut var24 = nf * (nf + 1.0) * (2.0 * nf + 1.0);
        var24 -= 0.5 * tie_term(&ranks);
        let sd = (var24 / 24.0).sqrt();
        if sd == 0.0 {
            1.0
        } else {
            // continuity correction toward the mean
            let shift = 0.5 * (statistic - mean).signum();
            let z = (statistic - mean - shift) / sd;
            (2.0 * std_normal_sf(z.abs())).min(1.0)
        }
    };

    Ok(TestResult {
        statistic,
        p_value,
        n: (a.len(), b.len()),
        significant_after_correction: false,
    })
}

/// Mann-Whitney U test, two-sided, with tie-corrected normal approximation
/// and continuity correction. The statistic is U of the first sample.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<TestResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Config("mann-whitney needs non-empty samples".into()));
    }
    let n1 = a.len() as f64;
    let n2 = b.len() as f64;
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = ranks_average(&pooled);
    let r1: f64 = ranks[..a.len()].iter().sum();
    let u1 = r1 - n1 * (n1 + 1.0) / 2.0;
    let u2 = n1 * n2 - u1;

    let mean = n1 * n2 / 2.0;
    let n = n1 + n2;
    let tie = tie_term(&pooled);
    let var = n1 * n2 / 12.0 * ((n + 1.0) - tie / (n * (n - 1.0)));
    let p_value = if var <= 0.0 {
        1.0
    } else {
        let u_max = u1.max(u2);
        let z = (u_max - mean - 0.5) / var.sqrt();
        (2.0 * std_normal_sf(z)).min(1.0)
    };

    Ok(TestResult {
        statistic: u1,
        p_value,
        n: (a.len(), b.len()),
        significant_after_correction: false,
    })
}

/// Pearson correlation; None when either input has zero variance.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let da: Vec<f64> = a.iter().map(|v| v - ma).collect();
    let db: Vec<f64> = b.iter().map(|v| v - mb).collect();
    if da.iter().all(|v| *v == 0.0) || db.iter().all(|v| *v == 0.0) {
        return None;
    }
    // identical (or exactly opposite) deviations are exact by definition;
    // shortcut them so downstream equality checks hold bit-for-bit
    if da == db {
        return Some(1.0);
    }
    if da.iter().zip(&db).all(|(x, y)| *x == -*y) {
        return Some(-1.0);
    }
    let num: f64 = da.iter().zip(&db).map(|(x, y)| x * y).sum();
    let va: f64 = da.iter().map(|v| v * v).sum();
    let vb: f64 = db.iter().map(|v| v * v).sum();
    Some((num / (va * vb).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman rank correlation: Pearson correlation of average ranks.
/// None when either rank vector has zero variance.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<Option<f64>> {
    if a.len() != b.len() {
        return Err(Error::Config("spearman needs equal-length samples".into()));
    }
    if a.len() < 3 {
        return Err(Error::Config("spearman needs at least 3 observations".into()));
    }
    Ok(pearson(&ranks_average(a), &ranks_average(b)))
}

/// Bonferroni correction: flag i iff p_i <= alpha / count.
pub fn bonferroni(p_values: &[f64], alpha: f64) -> Result<Vec<bool>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Config(format!("alpha must lie in (0,1), got {alpha}")));
    }
    let threshold = alpha / p_values.len().max(1) as f64;
    Ok(p_values.iter().map(|p| *p <= threshold).collect())
}

/// Median; None for empty input.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mid = sorted.len() / 2;
    Some(if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        0.5 * (sorted[mid - 1] + sorted[mid])
    })
}

/// Min-max normalize the pooled values of both lists to [0,1] and return
/// median(a) - median(b) on that scale; 0 when the pooled range vanishes.
pub fn median_difference_normalized(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Config("median difference needs non-empty samples".into()));
    }
    let lo = a.iter().chain(b).copied().fold(f64::INFINITY, f64::min);
    let hi = a.iter().chain(b).copied().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    if range == 0.0 {
        return Ok(0.0);
    }
    let scale = |values: &[f64]| -> Vec<f64> { values.iter().map(|v| (v - lo) / range).collect() };
    Ok(median(&scale(a)).unwrap() - median(&scale(b)).unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding;
    use rand::Rng;

    #[test]
    fn wilcoxon_identical_samples() {
        let a = [1.0, 2.0, 3.0];
        let r = wilcoxon_signed_rank(&a, &a).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn wilcoxon_exact_matches_reference() {
        // reference: scipy.stats.wilcoxon(a, b, method='exact') == (22.0, 0.625)
        let a = [125.0, 115.0, 130.0, 140.0, 140.5, 115.5, 140.2, 125.3, 140.4, 135.0];
        let b = [110.0, 122.0, 125.0, 120.0, 140.0, 124.5, 123.0, 137.0, 135.0, 145.0];
        let r = wilcoxon_signed_rank(&a, &b).unwrap();
        assert!((r.statistic - 22.0).abs() < 1e-9);
        assert!((r.p_value - 0.625).abs() < 1e-6, "p = {}", r.p_value);
    }

    #[test]
    fn wilcoxon_asymptotic_matches_reference() {
        // reference: scipy.stats.wilcoxon(x, y, correction=True, method='approx')
        // == (125.5, 0.028347606676647336)
        let x = [
            0.0, 0.3, -0.3, -0.9, -0.5, -1.0, 0.1, 1.3, -0.5, -0.6, 0.5, 0.4, 0.1, -0.9, -0.0,
            0.7, -1.3, -0.5, -1.9, -1.3, -1.8, -0.2, -1.3, 0.3, 0.2, -0.2, -2.5, -0.5, -0.0, 0.1,
        ];
        let y = [
            -1.1, 0.2, -0.9, -1.3, 1.0, -1.4, 0.5, 2.6, -0.7, -0.3, 1.0, 0.9, -0.7, -0.4, 1.8,
            -0.4, -0.0, 0.0, -2.1, 1.1, -0.6, -1.0, -0.8, 1.3, 0.4, 0.9, -2.2, 0.6, 1.8, -0.2,
        ];
        let r = wilcoxon_signed_rank(&x, &y).unwrap();
        assert!((r.statistic - 125.5).abs() < 1e-9);
        assert!((r.p_value - 0.028347606676647336).abs() < 1e-6, "p = {}", r.p_value);
    }

    #[test]
    fn wilcoxon_detects_a_uniform_shift() {
        let a: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let b: Vec<f64> = a.iter().map(|v| v + 2.0).collect();
        let r = wilcoxon_signed_rank(&a, &b).unwrap();
        assert!(r.p_value < 0.01, "p = {}", r.p_value);
    }

    #[test]
    fn mann_whitney_matches_reference() {
        // reference: scipy.stats.mannwhitneyu(a, b, method='asymptotic')
        // == (65.5, 0.0052344878643829085)
        let a = [19.0, 22.0, 16.0, 29.0, 24.0, 17.0, 21.0, 23.0];
        let b = [20.0, 11.0, 17.0, 12.0, 18.0, 15.0, 13.0, 14.0, 10.0];
        let r = mann_whitney_u(&a, &b).unwrap();
        assert!((r.statistic - 65.5).abs() < 1e-9);
        assert!((r.p_value - 0.0052344878643829085).abs() < 1e-6, "p = {}", r.p_value);
    }

    #[test]
    fn mann_whitney_total_separation() {
        let a: Vec<f64> = (1..21).map(f64::from).collect();
        let b: Vec<f64> = (100..125).map(f64::from).collect();
        let r = mann_whitney_u(&a, &b).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!(r.p_value < 1e-3, "p = {}", r.p_value);
        // reference: 1.205252299499121e-08
        assert!((r.p_value - 1.205252299499121e-8).abs() < 1e-6);
    }

    #[test]
    fn mann_whitney_p_is_symmetric() {
        let mut rng = seeding::stream(19, &["sym"]);
        for _ in 0..20 {
            let a: Vec<f64> = (0..12).map(|_| rng.random_range(0.0..4.0_f64).round()).collect();
            let b: Vec<f64> = (0..9).map(|_| rng.random_range(0.0..4.0_f64).round()).collect();
            let ab = mann_whitney_u(&a, &b).unwrap();
            let ba = mann_whitney_u(&b, &a).unwrap();
            assert_eq!(ab.p_value, ba.p_value);
            assert_eq!(ab.statistic + ba.statistic, (a.len() * b.len()) as f64);
        }
    }

    #[test]
    fn spearman_monotone_and_ties() {
        let a: [f64; 5] = [1.0, 2.0, 3.0, 4.0, 5.0];
        let up: Vec<f64> = a.iter().map(|v| v.exp() + 1.0).collect();
        let down: Vec<f64> = a.iter().map(|v| -v * v * v).collect();
        assert_eq!(spearman(&a, &up).unwrap(), Some(1.0));
        assert_eq!(spearman(&a, &down).unwrap(), Some(-1.0));

        // reference: scipy.stats.spearmanr == 0.9255372534209524
        let s1 = [1.0, 2.0, 2.0, 2.0, 3.0, 4.0, 4.0, 5.0, 6.0, 6.0];
        let s2 = [2.0, 1.0, 3.0, 3.0, 5.0, 4.0, 4.0, 6.0, 7.0, 6.5];
        let rho = spearman(&s1, &s2).unwrap().unwrap();
        assert!((rho - 0.9255372534209524).abs() < 1e-9, "rho = {rho}");

        // zero rank variance is missing, short input is an error
        assert_eq!(spearman(&[1.0, 1.0, 1.0], &a[..3]).unwrap(), None);
        assert!(spearman(&a[..2], &a[..2]).is_err());
    }

    #[test]
    fn spearman_invariant_under_monotone_transform() {
        let mut rng = seeding::stream(20, &["mono"]);
        let a: Vec<f64> = (0..15).map(|_| rng.random_range(-3.0..3.0)).collect();
        let b: Vec<f64> = (0..15).map(|_| rng.random_range(-3.0..3.0)).collect();
        let base = spearman(&a, &b).unwrap().unwrap();
        let ta: Vec<f64> = a.iter().map(|v| v.exp()).collect();
        let tb: Vec<f64> = b.iter().map(|v| v * 3.0 + 10.0).collect();
        assert_eq!(spearman(&ta, &tb).unwrap().unwrap(), base);
    }

    #[test]
    fn bonferroni_thresholds() {
        let flags = bonferroni(&vec![8.0e-5; 588], 0.05).unwrap();
        assert!(flags.iter().all(|&f| f), "0.05/588 ~ 8.50e-5 admits 8.0e-5");
        let flags = bonferroni(&vec![9.0e-5; 588], 0.05).unwrap();
        assert!(flags.iter().all(|&f| !f));

        assert_eq!(bonferroni(&[0.04], 0.05).unwrap(), vec![true]);

        let mut ps = vec![0.05 / 112.0; 112];
        ps[0] = 0.05 / 112.0 * 1.01;
        let flags = bonferroni(&ps, 0.05).unwrap();
        assert!(!flags[0]);
        assert!(flags[1..].iter().all(|&f| f));

        assert!(bonferroni(&[0.1], 1.5).is_err());
    }

    #[test]
    fn median_difference_examples() {
        assert_eq!(median_difference_normalized(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        assert_eq!(median_difference_normalized(&[0.0, 0.0, 0.0], &[1.0, 1.0, 1.0]).unwrap(), -1.0);
        assert_eq!(median_difference_normalized(&[5.0, 5.0], &[5.0]).unwrap(), 0.0);

        // 10-element oracle, computed by hand: pooled range [0, 10];
        // medians 3/10 and 6/10
        let a = [0.0, 2.0, 3.0, 4.0, 10.0];
        let b = [5.0, 6.0, 6.0, 7.0, 1.0];
        let d = median_difference_normalized(&a, &b).unwrap();
        assert!((d - (0.3 - 0.6)).abs() < 1e-12);
    }

    #[test]
    fn ranks_handle_ties_by_averaging() {
        assert_eq!(ranks_average(&[10.0, 20.0, 20.0, 30.0]), vec![1.0, 2.5, 2.5, 4.0]);
    }
}
