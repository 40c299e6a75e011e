//! Small statistical helpers shared by the experiments.

use libm::erfc;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Standard normal distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// Standard normal upper tail `1 − Φ(x)`, accurate for large `x`.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

/// `Φ(b) − Φ(a)` for `a ≤ b` without cancellation in either tail.
pub fn normal_interval(a: f64, b: f64) -> f64 {
    if a >= 0.0 {
        normal_sf(a) - normal_sf(b)
    } else if b <= 0.0 {
        normal_cdf(b) - normal_cdf(a)
    } else {
        1.0 - normal_cdf(a) - normal_sf(b)
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample mean and its standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = mean(xs);
    if xs.len() < 2 {
        return (m, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v: Vec<f64> = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Large-sample standard error of the median, `√(π/2)·sd/√n`.
pub fn median_se(xs: &[f64]) -> f64 {
    let (_, se_mean) = mean_se(xs);
    (std::f64::consts::PI / 2.0).sqrt() * se_mean
}

/// Binomial standard error of a proportion.
pub fn binomial_se(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Ordinary least squares line `y = intercept + slope·x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineFit {
    pub slope: f64,
    pub intercept: f64,
    /// NaN when fewer than three points were fitted.
    pub slope_se: f64,
}

impl AffineFit {
    pub fn fit(xs: &[f64], ys: &[f64]) -> Option<Self> {
        let n = xs.len();
        if n < 2 || n != ys.len() {
            return None;
        }
        let mx = mean(xs);
        let my = mean(ys);
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        if sxx == 0.0 {
            return None;
        }
        let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        let slope_se = if n > 2 {
            let rss: f64 = xs
                .iter()
                .zip(ys)
                .map(|(x, y)| (y - intercept - slope * x).powi(2))
                .sum();
            (rss / (n - 2) as f64 / sxx).sqrt()
        } else {
            f64::NAN
        };
        Some(Self {
            slope,
            intercept,
            slope_se,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Number of bins after merging sparse ones.
    pub bins: usize,
}

/// Pearson goodness-of-fit. `probs` must sum to one over the same bins as
/// `observed`. Adjacent bins are merged from the right until every expected
/// count is at least `min_expected`.
pub fn chi_square_gof(observed: &[u64], probs: &[f64], min_expected: f64) -> ChiSquareTest {
    assert_eq!(observed.len(), probs.len());
    let n: u64 = observed.iter().sum();
    let nf = n as f64;

    let mut merged: Vec<(f64, f64)> = Vec::new();
    let (mut acc_o, mut acc_e) = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(probs) {
        acc_o += o as f64;
        acc_e += p * nf;
        if acc_e >= min_expected {
            merged.push((acc_o, acc_e));
            acc_o = 0.0;
            acc_e = 0.0;
        }
    }
    if acc_e > 0.0 || acc_o > 0.0 {
        match merged.last_mut() {
            Some(last) => {
                last.0 += acc_o;
                last.1 += acc_e;
            }
            None => merged.push((acc_o, acc_e)),
        }
    }

    let statistic: f64 = merged.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    let bins = merged.len();
    let dof = bins.saturating_sub(1).max(1);
    let p_value = ChiSquared::new(dof as f64)
        .map(|d| d.sf(statistic))
        .unwrap_or(f64::NAN);
    ChiSquareTest {
        statistic,
        dof,
        p_value,
        bins,
    }
}

/// One-sample Kolmogorov–Smirnov statistic against the continuous `cdf`.
pub fn ks_statistic(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut v = sample.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic p-value of the KS statistic `d` for sample size `n`.
pub fn ks_p_value(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..=200 {
        let term = 2.0 * (-1f64).powi(j - 1) * (-2.0 * (j as f64 * lambda).powi(2)).exp();
        sum += term;
        if term.abs() < 1e-16 {
            break;
        }
    }
    sum.clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_values() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-16);
        assert!((normal_interval(-1.0, 1.0) - 0.682_689_492_137_086).abs() < 1e-14);
        // far tail keeps relative precision
        let tail = normal_interval(10.0, 11.0);
        assert!(
            (tail / 7.619_661_958_203_076e-24 - 1.0).abs() < 1e-12,
            "{tail}"
        );
    }

    #[test]
    fn chi_square_matches_reference() {
        // classic example: uniform die-like counts
        let obs = [28u64, 31, 40, 35];
        let t = chi_square_gof(&obs, &[0.25; 4], 5.0);
        assert!((t.statistic - 2.417_910_447_761_194).abs() < 1e-12);
        assert!((t.p_value - 0.490_309_306_965_388_3).abs() < 1e-9);
        assert_eq!(t.dof, 3);
    }

    #[test]
    fn sparse_bins_are_merged() {
        let t = chi_square_gof(&[50, 45, 3, 2], &[0.5, 0.45, 0.03, 0.02], 5.0);
        assert_eq!(t.bins, 3);
    }

    #[test]
    fn affine_fit_recovers_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 0.5 + 2.0 * x).collect();
        let f = AffineFit::fit(&xs, &ys).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12);
        assert!((f.intercept - 0.5).abs() < 1e-12);
        assert!(f.slope_se.abs() < 1e-12);
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn ks_p_value_limits() {
        assert!(ks_p_value(0.0, 100) > 0.999);
        assert!(ks_p_value(0.5, 100) < 1e-10);
        // critical value at 5% for large n is ~1.358/sqrt(n)
        let p = ks_p_value(1.358 / 100.0, 10_000);
        assert!((p - 0.05).abs() < 0.005, "{p}");
    }
}
