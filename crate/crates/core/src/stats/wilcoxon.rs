//! Wilcoxon rank-sum (Mann-Whitney) test.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Largest combined sample size for which the exact null distribution is used.
pub const EXACT_LIMIT: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    TwoSided,
    /// `a` tends to be larger than `b`.
    Greater,
    /// `a` tends to be smaller than `b`.
    Less,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RankSum {
    /// Mann-Whitney U of the first sample.
    pub u: f64,
    pub p_value: f64,
    pub exact: bool,
}

/// Midranks (1-based) of `values`, plus the tie-group sizes.
fn midranks<T: Real>(values: &[T]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).expect("finite samples"));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = Vec::new();
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let r = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = r;
        }
        ties.push(end - start);
        start = end;
    }
    (ranks, ties)
}

/// `counts[u]`: number of size-`m` subsets of ranks `1..=n` whose U statistic equals `u`.
pub fn exact_u_counts(m: usize, n: usize) -> Vec<u64> {
    let total = m + n;
    let max_sum = total * (total + 1) / 2;
    // dp[j][s]: subsets of size j with rank sum s.
    let mut dp = vec![vec![0u64; max_sum + 1]; m + 1];
    dp[0][0] = 1;
    for r in 1..=total {
        for j in (1..=m.min(r)).rev() {
            for s in (r..=max_sum).rev() {
                dp[j][s] += dp[j - 1][s - r];
            }
        }
    }
    let offset = m * (m + 1) / 2;
    (0..=m * n).map(|u| dp[m][u + offset]).collect()
}

/// Rank-sum test of `a` against `b`.
///
/// Uses the exact null distribution when there are no ties and the combined size is
/// at most [`EXACT_LIMIT`]; otherwise the normal approximation with tie and continuity
/// corrections. Two-sided p-values double the smaller tail, capped at 1.
pub fn rank_sum<T: Real>(a: &[T], b: &[T], alternative: Alternative) -> Result<RankSum> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("sample"));
    }
    if a.iter().chain(b).any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("samples must be finite".into()));
    }
    let (m, n) = (a.len(), b.len());
    let all: Vec<T> = a.iter().chain(b).copied().collect();
    let (ranks, ties) = midranks(&all);
    let r_a: f64 = ranks[..m].iter().sum();
    let u = r_a - (m * (m + 1)) as f64 / 2.0;
    if ties.len() == 1 {
        return Ok(RankSum { u, p_value: 1.0, exact: false });
    }
    let tie_free = ties.iter().all(|&t| t == 1);
    if tie_free && m + n <= EXACT_LIMIT {
        let counts = exact_u_counts(m, n);
        let total: u64 = counts.iter().sum();
        let u_int = u.round() as usize;
        let lower: u64 = counts[..=u_int].iter().sum();
        let upper: u64 = counts[u_int..].iter().sum();
        let (lower, upper) = (lower as f64 / total as f64, upper as f64 / total as f64);
        let p = match alternative {
            Alternative::TwoSided => (2.0 * lower.min(upper)).min(1.0),
            Alternative::Greater => upper,
            Alternative::Less => lower,
        };
        return Ok(RankSum { u, p_value: p, exact: true });
    }
    let (mf, nf) = (m as f64, n as f64);
    let big_n = mf + nf;
    let mean = mf * nf / 2.0;
    let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / (big_n * (big_n - 1.0));
    let var = mf * nf / 12.0 * ((big_n + 1.0) - tie_term);
    if var <= 0.0 {
        return Ok(RankSum { u, p_value: 1.0, exact: false });
    }
    let sd = var.sqrt();
    let std_normal = Normal::new(0.0, 1.0).expect("valid parameters");
    let p = match alternative {
        Alternative::TwoSided => {
            let z = ((u - mean).abs() - 0.5).max(0.0) / sd;
            (2.0 * std_normal.sf(z)).min(1.0)
        }
        Alternative::Greater => std_normal.sf((u - mean - 0.5) / sd),
        Alternative::Less => std_normal.cdf((u - mean + 0.5) / sd),
    };
    Ok(RankSum { u, p_value: p, exact: false })
}

/// Two-sided rank-sum p-value.
pub fn wilcoxon_rank_sum<T: Real>(a: &[T], b: &[T]) -> Result<f64> {
    Ok(rank_sum(a, b, Alternative::TwoSided)?.p_value)
}
