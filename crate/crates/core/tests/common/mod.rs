#![allow(dead_code)]

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Upper-tail p-value of Pearson's goodness-of-fit statistic for `counts`
/// against category probabilities `probs`.
pub fn chi_square_p(counts: &[u64], probs: &[f64]) -> f64 {
    assert_eq!(counts.len(), probs.len());
    let total: u64 = counts.iter().sum();
    let stat: f64 = counts
        .iter()
        .zip(probs)
        .map(|(&c, &p)| {
            let e = p * total as f64;
            (c as f64 - e).powi(2) / e
        })
        .sum();
    let df = (counts.len() - 1) as f64;
    1.0 - ChiSquared::new(df).unwrap().cdf(stat)
}

/// Size of a maximum matching by exhaustive search over left vertices.
pub fn brute_force_max_matching(adj: &[Vec<usize>], n_right: usize) -> usize {
    fn go(adj: &[Vec<usize>], i: usize, used: &mut Vec<bool>) -> usize {
        if i == adj.len() {
            return 0;
        }
        let mut best = go(adj, i + 1, used);
        for &v in &adj[i] {
            if !used[v] {
                used[v] = true;
                best = best.max(1 + go(adj, i + 1, used));
                used[v] = false;
            }
        }
        best
    }
    go(adj, 0, &mut vec![false; n_right])
}
