//! Deterministic matchers used as oracles and as benchmark comparators:
//! Hopcroft–Karp on arbitrary bipartite adjacency, and Euler-tour halving
//! for regular graphs whose degree is a power of two.

use std::collections::VecDeque;

use crate::graph::{derive_adj_q, BipartiteRegularGraph, Matching};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BaselineError {
    #[error("euler split needs an even degree, got d={d}")]
    OddDegree { d: usize },
    #[error("d not a power of two (d={d})")]
    NotPowerOfTwo { d: usize },
}

/// Work counters for a Hopcroft–Karp run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct HkStats {
    pub phases: u64,
    pub augmentations: u64,
    /// Adjacency entries inspected across BFS and DFS.
    pub edge_scans: u64,
}

const INF: u32 = u32::MAX;

/// Maximum matching of the bipartite graph whose left vertex `p` has the
/// right neighbours `adj[p]`, with `n_right` right vertices.
pub fn hopcroft_karp(adj: &[Vec<usize>], n_right: usize) -> Matching {
    hopcroft_karp_with_stats(adj, n_right).0
}

pub fn hopcroft_karp_with_stats(adj: &[Vec<usize>], n_right: usize) -> (Matching, HkStats) {
    let n_left = adj.len();
    let mut mate_l: Vec<Option<usize>> = vec![None; n_left];
    let mut mate_r: Vec<Option<usize>> = vec![None; n_right];
    let mut dist = vec![INF; n_left];
    let mut edge_it = vec![0usize; n_left];
    let mut queue = VecDeque::with_capacity(n_left);
    let mut stack: Vec<usize> = Vec::new();
    let mut stats = HkStats::default();

    loop {
        // BFS from every free left vertex; `found` is the layer at which a
        // free right vertex first appears.
        queue.clear();
        for (u, m) in mate_l.iter().enumerate() {
            if m.is_none() {
                dist[u] = 0;
                queue.push_back(u);
            } else {
                dist[u] = INF;
            }
        }
        let mut found = INF;
        while let Some(u) = queue.pop_front() {
            if dist[u] >= found {
                continue;
            }
            for &v in &adj[u] {
                stats.edge_scans += 1;
                match mate_r[v] {
                    None => found = found.min(dist[u] + 1),
                    Some(w) if dist[w] == INF => {
                        dist[w] = dist[u] + 1;
                        queue.push_back(w);
                    }
                    Some(_) => {}
                }
            }
        }
        if found == INF {
            break;
        }
        stats.phases += 1;

        // Layered DFS, iterative, from each free left vertex.
        edge_it.iter_mut().for_each(|e| *e = 0);
        for root in 0..n_left {
            if mate_l[root].is_some() {
                continue;
            }
            stack.clear();
            stack.push(root);
            let mut reached: Option<usize> = None;
            while let Some(&u) = stack.last() {
                if edge_it[u] >= adj[u].len() {
                    dist[u] = INF;
                    stack.pop();
                    continue;
                }
                let v = adj[u][edge_it[u]];
                edge_it[u] += 1;
                stats.edge_scans += 1;
                match mate_r[v] {
                    None if dist[u] + 1 == found => {
                        reached = Some(v);
                        break;
                    }
                    Some(w) if dist[w] != INF && dist[w] == dist[u] + 1 => stack.push(w),
                    _ => {}
                }
            }
            if let Some(mut v) = reached {
                // Flip along the stack, deepest first.
                while let Some(u) = stack.pop() {
                    let next = mate_l[u];
                    mate_l[u] = Some(v);
                    mate_r[v] = Some(u);
                    match next {
                        Some(prev) => v = prev,
                        None => break,
                    }
                }
                stats.augmentations += 1;
            }
        }
    }

    let mut matching = Matching::with_sides(n_left, n_right);
    for (u, v) in mate_l.iter().enumerate() {
        if let Some(v) = *v {
            matching.set_pair(u, v);
            matching.bump_size();
        }
    }
    (matching, stats)
}

/// Splits an even-degree regular graph into two edge-disjoint `d/2`-regular
/// graphs by orienting closed trails: edges walked from P to Q form the
/// first half, edges walked from Q to P the second.
pub fn euler_split(
    graph: &BipartiteRegularGraph,
) -> Result<(BipartiteRegularGraph, BipartiteRegularGraph), BaselineError> {
    let (n, d) = (graph.n(), graph.d());
    if d % 2 != 0 {
        return Err(BaselineError::OddDegree { d });
    }
    // Vertices 0..n are P, n..2n are Q. Edge e = p * d + slot.
    let edge_end_q = |e: usize| graph.neighbor_of_p(e / d, e % d);
    let mut q_edges: Vec<Vec<usize>> = vec![Vec::with_capacity(d); n];
    for e in 0..n * d {
        q_edges[edge_end_q(e)].push(e);
    }
    let mut used = vec![false; n * d];
    let mut cursor = vec![0usize; 2 * n];
    let mut first: Vec<Vec<usize>> = vec![Vec::with_capacity(d / 2); n];
    let mut second: Vec<Vec<usize>> = vec![Vec::with_capacity(d / 2); n];

    let incident = |v: usize, i: usize| -> usize {
        if v < n {
            v * d + i
        } else {
            q_edges[v - n][i]
        }
    };

    for start in 0..2 * n {
        loop {
            // Each closed trail from `start`; all degrees are even, so a
            // trail can only get stuck where it began.
            let mut cur = start;
            let mut moved = false;
            loop {
                while cursor[cur] < d && used[incident(cur, cursor[cur])] {
                    cursor[cur] += 1;
                }
                if cursor[cur] == d {
                    break;
                }
                let e = incident(cur, cursor[cur]);
                used[e] = true;
                moved = true;
                let (p, q) = (e / d, edge_end_q(e));
                if cur < n {
                    first[p].push(q);
                    cur = n + q;
                } else {
                    second[p].push(q);
                    cur = p;
                }
            }
            debug_assert_eq!(cur, start);
            if !moved {
                break;
            }
        }
    }

    let half = |adj_p: Vec<Vec<usize>>| {
        let adj_q = derive_adj_q(n, &adj_p);
        BipartiteRegularGraph::from_parts_unchecked(d / 2, adj_p, adj_q, graph.is_multigraph())
    };
    Ok((half(first), half(second)))
}

/// Perfect matching by repeated Euler halving down to degree one. Returns
/// the matching and the number of edges traversed.
pub fn euler_matching(graph: &BipartiteRegularGraph) -> Result<(Matching, u64), BaselineError> {
    let d = graph.d();
    if !d.is_power_of_two() {
        return Err(BaselineError::NotPowerOfTwo { d });
    }
    let mut work = 0u64;
    let mut current = std::borrow::Cow::Borrowed(graph);
    while current.d() > 1 {
        work += current.m() as u64;
        let (half, _) = euler_split(&current)?;
        current = std::borrow::Cow::Owned(half);
    }
    let mates = current.adj_p().iter().map(|row| Some(row[0])).collect();
    Ok((Matching::from_mates(mates), work))
}
