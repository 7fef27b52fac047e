//! Wilcoxon rank-sum (Mann-Whitney U) test.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Combined sample size up to which p-values come from exact enumeration.
pub const EXACT_LIMIT: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankSumTest {
    /// U statistic of the first sample.
    pub u: f64,
    /// Two-sided p-value.
    pub p_value: f64,
    pub exact: bool,
}

/// Midranks (1-based) of `values`, ties sharing their average rank.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = alloc::vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &ix in &order[start..end] {
            ranks[ix] = rank;
        }
        start = end;
    }
    ranks
}

/// Two-sided Mann-Whitney U test of `x` against `y`.
///
/// For `n1 + n2 <= 12` the p-value is the exact permutation probability of a
/// U at least as far from `n1·n2/2` as the observed one, over all splits of
/// the pooled midranks. Larger samples use the normal approximation with
/// tie and continuity corrections.
pub fn mann_whitney_u(x: &[f64], y: &[f64]) -> Result<RankSumTest> {
    let (n1, n2) = (x.len(), y.len());
    if n1 == 0 || n2 == 0 {
        return Err(Error::InvalidArgument("both samples need at least one value"));
    }
    if x.iter().chain(y).any(|v| v.is_nan()) {
        return Err(Error::NonFinite("rank-sum sample"));
    }
    let pooled: Vec<f64> = x.iter().chain(y).copied().collect();
    let ranks = midranks(&pooled);
    let offset = (n1 * (n1 + 1)) as f64 / 2.0;
    let u = ranks[..n1].iter().sum::<f64>() - offset;
    let mean = (n1 * n2) as f64 / 2.0;
    let n = n1 + n2;

    if n <= EXACT_LIMIT {
        let observed = (u - mean).abs() - 1e-9;
        let (mut extreme, mut total) = (0u64, 0u64);
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize != n1 {
                continue;
            }
            let r: f64 = (0..n).filter(|b| mask >> b & 1 == 1).map(|b| ranks[b]).sum();
            total += 1;
            if (r - offset - mean).abs() >= observed {
                extreme += 1;
            }
        }
        return Ok(RankSumTest {
            u,
            p_value: extreme as f64 / total as f64,
            exact: true,
        });
    }

    let mut sorted = pooled.clone();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && sorted[end] == sorted[start] {
            end += 1;
        }
        let t = (end - start) as f64;
        tie_term += t * t * t - t;
        start = end;
    }
    let nf = n as f64;
    let var = (n1 * n2) as f64 / 12.0 * ((nf + 1.0) - tie_term / (nf * (nf - 1.0)));
    if var <= 0.0 {
        return Ok(RankSumTest {
            u,
            p_value: 1.0,
            exact: false,
        });
    }
    let z = ((u - mean).abs() - 0.5).max(0.0) / libm::sqrt(var);
    Ok(RankSumTest {
        u,
        p_value: libm::erfc(z / core::f64::consts::SQRT_2).min(1.0),
        exact: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separated_samples() {
        let t = mann_whitney_u(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
        assert_eq!(t.u, 0.0);
        assert!((t.p_value - 0.1).abs() < 1e-12);
        assert!(t.exact);
    }

    #[test]
    fn identical_samples() {
        let t = mann_whitney_u(&[2.0; 4], &[2.0; 4]).unwrap();
        assert_eq!(t.p_value, 1.0);
        let big = mann_whitney_u(&[2.0; 10], &[2.0; 10]).unwrap();
        assert_eq!(big.p_value, 1.0);
    }

    #[test]
    fn midranks_share_ties() {
        assert_eq!(midranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn normal_branch_matches_reference() {
        // Reference value from the usual continuity-corrected normal approximation:
        // n1 = n2 = 10, U = 0, σ² = 175, z = (50 - 0.5) / √175.
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let y: Vec<f64> = (10..20).map(f64::from).collect();
        let t = mann_whitney_u(&x, &y).unwrap();
        assert!(!t.exact);
        assert_eq!(t.u, 0.0);
        let z: f64 = 49.5 / 175f64.sqrt();
        assert!((t.p_value - libm::erfc(z / core::f64::consts::SQRT_2)).abs() < 1e-15);
        assert!(t.p_value < 2e-4);
    }

    #[test]
    fn empty_is_error() {
        assert!(mann_whitney_u(&[], &[1.0]).is_err());
        assert!(mann_whitney_u(&[f64::NAN], &[1.0]).is_err());
    }
}
