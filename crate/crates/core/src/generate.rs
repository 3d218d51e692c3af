//! Random d-regular bipartite graphs as unions of random permutations.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::graph::{derive_adj_q, BipartiteRegularGraph};
use crate::rng::{seeded, Purpose};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GenerateError {
    #[error("degree must satisfy 1 <= d <= n (got n={n}, d={d})")]
    BadDegree { n: usize, d: usize },
    #[error("simple mode gave up on row {row} of column {column} after {attempts} attempts")]
    RetryCapExceeded { row: usize, column: usize, attempts: usize },
}

/// Edge-union of `d` independent uniformly random permutations of `[0, n)`.
///
/// With `simple`, each new permutation is repaired by random transpositions
/// until no row holds a repeated neighbour. Each row gets at most `100 * d`
/// repair attempts per column.
pub fn gen_union_permutations(
    n: usize,
    d: usize,
    seed: u64,
    simple: bool,
) -> Result<BipartiteRegularGraph, GenerateError> {
    if d == 0 || d > n {
        return Err(GenerateError::BadDegree { n, d });
    }
    let mut rng = seeded(seed, Purpose::Generate);
    let mut adj_p: Vec<Vec<usize>> = (0..n).map(|_| Vec::with_capacity(d)).collect();
    let mut perm: Vec<usize> = (0..n).collect();
    for column in 0..d {
        perm.shuffle(&mut rng);
        if simple && column > 0 {
            repair_column(&adj_p, &mut perm, column, d, &mut rng)?;
        }
        for (p, &q) in perm.iter().enumerate() {
            adj_p[p].push(q);
        }
    }
    let adj_q = derive_adj_q(n, &adj_p);
    let multigraph = !simple;
    Ok(BipartiteRegularGraph::from_parts_unchecked(d, adj_p, adj_q, multigraph))
}

fn repair_column<R: Rng>(
    adj_p: &[Vec<usize>],
    perm: &mut [usize],
    column: usize,
    d: usize,
    rng: &mut R,
) -> Result<(), GenerateError> {
    let n = perm.len();
    let cap = 100 * d;
    let clashes = |p: usize, q: usize| adj_p[p].contains(&q);
    let mut attempts = vec![0usize; n];
    loop {
        let mut dirty = false;
        for p in 0..n {
            while clashes(p, perm[p]) {
                dirty = true;
                attempts[p] += 1;
                if attempts[p] > cap {
                    return Err(GenerateError::RetryCapExceeded { row: p, column, attempts: cap });
                }
                // Swap with a random row whose current value suits p. The
                // other row may start clashing; it is repaired on its turn.
                let r = rng.gen_range(0..n);
                if r != p && !clashes(p, perm[r]) {
                    perm.swap(p, r);
                }
            }
        }
        if !dirty {
            return Ok(());
        }
    }
}
