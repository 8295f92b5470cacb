//! Wilcoxon signed-rank test for paired samples.
//!
//! Zero differences are dropped, tied magnitudes get midranks, and the
//! statistic is `min(W+, W-)`. Up to [`EXACT_MAX_N`] non-zero pairs the
//! two-sided p-value is exact: the fraction of the `2^n` sign assignments
//! whose statistic is at most the observed one. Beyond that a normal
//! approximation with tie and continuity correction is used.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const EXACT_MAX_N: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum WilcoxonMethod {
    Exact,
    NormalApproximation,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WilcoxonResult {
    pub statistic: f64,
    pub w_plus: f64,
    pub w_minus: f64,
    pub p_value: f64,
    pub n_effective: usize,
    pub method: WilcoxonMethod,
}

impl WilcoxonResult {
    pub fn significant(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}

/// Midranks of `values` (1-based), doubled so that they are integers.
pub fn doubled_midranks(values: &[f64]) -> Vec<u64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0u64; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // positions i..=j share rank ((i+1) + (j+1)) / 2
        let doubled = (i + 1 + j + 1) as u64;
        for &k in &order[i..=j] {
            ranks[k] = doubled;
        }
        i = j + 1;
    }
    ranks
}

pub fn wilcoxon_signed_rank<T: Scalar>(a: &[T], b: &[T]) -> Result<WilcoxonResult> {
    if a.len() != b.len() {
        return Err(Error::shape("wilcoxon pairs", a.len(), b.len()));
    }
    let mut diffs = Vec::with_capacity(a.len());
    for (&x, &y) in a.iter().zip(b) {
        let d = (x - y).as_f64();
        if !d.is_finite() {
            return Err(Error::NonFinite("wilcoxon differences"));
        }
        if d != 0.0 {
            diffs.push(d);
        }
    }
    let n = diffs.len();
    if n == 0 {
        return Err(Error::Degenerate("all paired differences are zero"));
    }
    let magnitudes: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks2 = doubled_midranks(&magnitudes);
    let plus2: u64 = diffs.iter().zip(&ranks2).filter(|(d, _)| **d > 0.0).map(|(_, &r)| r).sum();
    let total2: u64 = ranks2.iter().sum();
    let minus2 = total2 - plus2;
    let stat2 = plus2.min(minus2);
    let (w_plus, w_minus, statistic) = (plus2 as f64 / 2.0, minus2 as f64 / 2.0, stat2 as f64 / 2.0);

    let (p_value, method) = if n <= EXACT_MAX_N {
        let count = exact_tail_count(&ranks2, stat2);
        (count as f64 / (1u64 << n) as f64, WilcoxonMethod::Exact)
    } else {
        (normal_p(&magnitudes, n, statistic), WilcoxonMethod::NormalApproximation)
    };
    Ok(WilcoxonResult { statistic, w_plus, w_minus, p_value, n_effective: n, method })
}

/// Number of sign assignments with `min(W+, W-) <= stat` (all in doubled units).
fn exact_tail_count(ranks2: &[u64], stat2: u64) -> u64 {
    let total2: u64 = ranks2.iter().sum();
    // counts[s] = number of subsets whose doubled rank sum is s
    let mut counts = vec![0u64; total2 as usize + 1];
    counts[0] = 1;
    let mut reach = 0usize;
    for &r in ranks2 {
        let r = r as usize;
        for s in (0..=reach).rev() {
            if counts[s] > 0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    counts
        .iter()
        .enumerate()
        .filter(|(s, _)| {
            let s = *s as u64;
            s <= stat2 || s >= total2 - stat2
        })
        .map(|(_, &c)| c)
        .sum()
}

fn normal_p(magnitudes: &[f64], n: usize, statistic: f64) -> f64 {
    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let mut sorted = magnitudes.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
    if var <= 0.0 {
        return 1.0;
    }
    // statistic <= mean always, so the continuity correction moves it toward the mean
    let z = ((statistic - mean + 0.5) / var.sqrt()).min(0.0);
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    (2.0 * normal.cdf(z)).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_samples_are_degenerate() {
        assert!(matches!(wilcoxon_signed_rank(&[1.0, 2.0], &[1.0, 2.0]), Err(Error::Degenerate(_))));
    }

    #[test]
    fn three_positive_differences() {
        let r = wilcoxon_signed_rank(&[1.0, 2.0, 3.0], &[0.0, 0.0, 0.0]).unwrap();
        assert_eq!((r.w_minus, r.statistic), (0.0, 0.0));
        assert_eq!(r.p_value, 0.25);
        assert_eq!(r.method, WilcoxonMethod::Exact);
    }

    #[test]
    fn interpretation_at_five_percent() {
        let r = WilcoxonResult {
            statistic: 39.0,
            w_plus: 39.0,
            w_minus: 0.0,
            p_value: 0.144,
            n_effective: 16,
            method: WilcoxonMethod::NormalApproximation,
        };
        assert!(!r.significant(0.05));
    }

    #[test]
    fn midranks_for_ties() {
        assert_eq!(doubled_midranks(&[1.0, 3.0, 3.0, 2.0]), vec![2, 7, 7, 4]);
    }

    #[test]
    fn zero_differences_dropped() {
        let r = wilcoxon_signed_rank(&[1.0, 5.0, 2.0], &[1.0, 3.0, 3.0]).unwrap();
        assert_eq!(r.n_effective, 2);
    }

    #[test]
    fn normal_approximation_for_large_n() {
        let a: Vec<f64> = (1..=30).map(|i| i as f64).collect();
        let b = vec![0.0; 30];
        let r = wilcoxon_signed_rank(&a, &b).unwrap();
        assert_eq!(r.method, WilcoxonMethod::NormalApproximation);
        assert!(r.p_value < 1e-4);
        assert_eq!(r.statistic, 0.0);
    }

    #[test]
    fn p_value_at_most_one() {
        let r = wilcoxon_signed_rank(&[1.0, -1.0], &[0.0, 0.0]).unwrap();
        assert_eq!(r.p_value, 1.0);
    }
}
