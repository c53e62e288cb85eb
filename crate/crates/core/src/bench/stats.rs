//! Rank statistics: Mann-Whitney U, Vargha-Delaney Â and summaries.

use statrs::function::erf::erfc;

/// Largest `m·n` for which the exact null distribution is used.
pub const EXACT_LIMIT: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MannWhitney {
    /// U statistic of the first sample: pairs (x, y) with x > y, ties counting half.
    pub u: f64,
    /// Two-sided p-value.
    pub p: f64,
    pub exact: bool,
}

/// Ranks of `xs` followed by `ys` in the pooled sample, ties sharing their
/// mean rank. Also returns the tie group sizes.
fn midranks(xs: &[f64], ys: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let pooled: Vec<f64> = xs.iter().chain(ys).copied().collect();
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&a, &b| pooled[a].total_cmp(&pooled[b]));
    let mut ranks = vec![0.0; pooled.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && pooled[order[j + 1]] == pooled[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        ties.push(j - i + 1);
        i = j + 1;
    }
    (ranks, ties)
}

fn rank_sum_u(xs: &[f64], ys: &[f64]) -> (f64, Vec<usize>) {
    let (ranks, ties) = midranks(xs, ys);
    let m = xs.len() as f64;
    let r1: f64 = ranks[..xs.len()].iter().sum();
    (r1 - m * (m + 1.0) / 2.0, ties)
}

/// Number of arrangements giving each U value, for samples of size m and n
/// without ties. `counts[u]` for u in 0..=m·n.
fn u_distribution(m: usize, n: usize) -> Vec<f64> {
    // f[j][u]: arrangements of i x's and j y's with statistic u, built up over i.
    let mut f: Vec<Vec<f64>> = (0..=n).map(|_| vec![1.0]).collect();
    for i in 1..=m {
        let mut next: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
        next.push(vec![1.0]);
        for j in 1..=n {
            let mut row = vec![0.0; i * j + 1];
            // Largest element is an x: it exceeds all j y's.
            for (u, c) in f[j].iter().enumerate() {
                row[u + j] += c;
            }
            // Largest element is a y.
            for (u, c) in next[j - 1].iter().enumerate() {
                row[u] += c;
            }
            next.push(row);
        }
        f = next;
    }
    f.pop().expect("n + 1 rows")
}

pub fn mann_whitney_u(xs: &[f64], ys: &[f64]) -> MannWhitney {
    assert!(!xs.is_empty() && !ys.is_empty(), "both samples must be non-empty");
    let (m, n) = (xs.len(), ys.len());
    let (u, ties) = rank_sum_u(xs, ys);
    let tied = ties.iter().any(|&t| t > 1);
    if m * n <= EXACT_LIMIT && !tied {
        return MannWhitney {
            u,
            p: exact_p(u, m, n),
            exact: true,
        };
    }
    MannWhitney {
        u,
        p: normal_p(u, m, n, &ties),
        exact: false,
    }
}

/// Exact two-sided p-value: twice the smaller tail, capped at 1.
pub fn exact_p(u: f64, m: usize, n: usize) -> f64 {
    let counts = u_distribution(m, n);
    let total: f64 = counts.iter().sum();
    let k = u.round() as usize;
    let lower: f64 = counts[..=k].iter().sum::<f64>() / total;
    let upper: f64 = counts[k..].iter().sum::<f64>() / total;
    (2.0 * lower.min(upper)).min(1.0)
}

/// Normal approximation with tie and continuity corrections.
pub fn normal_p(u: f64, m: usize, n: usize, ties: &[usize]) -> f64 {
    let (mf, nf) = (m as f64, n as f64);
    let total = mf + nf;
    let tie_term: f64 = ties.iter().map(|&t| (t as f64).powi(3) - t as f64).sum();
    let var = mf * nf / 12.0 * ((total + 1.0) - tie_term / (total * (total - 1.0)));
    if var <= 0.0 {
        return 1.0;
    }
    let z = ((u - mf * nf / 2.0).abs() - 0.5).max(0.0) / var.sqrt();
    erfc(z / std::f64::consts::SQRT_2).min(1.0)
}

/// Vargha-Delaney Â: P(X > Y) + P(X = Y)/2.
pub fn vargha_delaney_a(xs: &[f64], ys: &[f64]) -> f64 {
    assert!(!xs.is_empty() && !ys.is_empty(), "both samples must be non-empty");
    let (ranks, _) = midranks(xs, ys);
    let (m, n) = (xs.len() as f64, ys.len() as f64);
    let r1: f64 = ranks[..xs.len()].iter().sum();
    (r1 / m - (m + 1.0) / 2.0) / n
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub mean: f64,
    pub q3: f64,
    pub max: f64,
}

/// Linear-interpolation quantile over sorted data (the common "type 7").
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn summarize(xs: &[f64]) -> Summary {
    assert!(!xs.is_empty(), "cannot summarize an empty sample");
    let mut s = xs.to_vec();
    s.sort_by(f64::total_cmp);
    Summary {
        min: s[0],
        q1: quantile(&s, 0.25),
        median: quantile(&s, 0.5),
        mean: s.iter().sum::<f64>() / s.len() as f64,
        q3: quantile(&s, 0.75),
        max: s[s.len() - 1],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distribution_counts_sum_to_binomial() {
        let d = u_distribution(3, 3);
        assert_eq!(d, [1.0, 1.0, 2.0, 3.0, 3.0, 3.0, 3.0, 2.0, 1.0, 1.0]);
        assert_eq!(u_distribution(1, 4), [1.0; 5]);
    }

    #[test]
    fn midranks_share_ties() {
        let (r, t) = midranks(&[1.0, 2.0], &[2.0, 3.0]);
        assert_eq!(r, [1.0, 2.5, 2.5, 4.0]);
        assert_eq!(t, [1, 2, 1]);
    }

    #[test]
    fn summary_uses_interpolated_quartiles() {
        let s = summarize(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!((s.q1, s.median, s.q3), (1.75, 2.5, 3.25));
        assert_eq!((s.min, s.max, s.mean), (1.0, 4.0, 2.5));
    }
}
