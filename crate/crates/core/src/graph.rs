//! d-regular bipartite (multi)graphs in adjacency-array form, and matchings on them.
//!
//! The two sides are called P and Q and are indexed independently from zero.
//! `adj_p[p]` lists the d Q-neighbours of `p` in arrival order; `adj_q` is the
//! mirror image and is always materialized so that both directions cost O(1)
//! per edge.

use std::fmt;

/// A bipartite graph in which every vertex on both sides has degree exactly `d`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteRegularGraph {
    n: usize,
    d: usize,
    adj_p: Vec<Vec<usize>>,
    adj_q: Vec<Vec<usize>>,
    multigraph: bool,
}

/// First invariant found broken by [`validate`].
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Violation {
    #[error("expected {expected} rows on side {side}, found {found}")]
    RowCount { side: char, expected: usize, found: usize },
    #[error("row {row} on side {side} has {found} entries, expected d = {d}")]
    RowLength { side: char, row: usize, found: usize, d: usize },
    #[error("row {row} on side {side} holds index {index} outside [0, {n})")]
    IndexOutOfRange { side: char, row: usize, index: usize, n: usize },
    #[error("row {row} on side {side} repeats index {index} in a simple graph")]
    RepeatedEntry { side: char, row: usize, index: usize },
    #[error("q={q} occurs {in_p} times in P row {p} but p={p} occurs {in_q} times in Q row {q}")]
    Asymmetric { p: usize, q: usize, in_p: usize, in_q: usize },
}

impl BipartiteRegularGraph {
    /// Builds the graph from P-side rows, deriving the Q side. Fails with the
    /// first violated invariant.
    pub fn from_adj_p(
        d: usize,
        adj_p: Vec<Vec<usize>>,
        multigraph: bool,
    ) -> Result<Self, Violation> {
        let n = adj_p.len();
        check_rows('P', &adj_p, n, d, multigraph)?;
        let adj_q = derive_adj_q(n, &adj_p);
        let graph = Self { n, d, adj_p, adj_q, multigraph };
        validate(&graph)?;
        Ok(graph)
    }

    /// Builds the graph from both sides as given. Nothing is derived, so a
    /// mismatched `adj_q` is reported as an asymmetry.
    pub fn from_parts(
        d: usize,
        adj_p: Vec<Vec<usize>>,
        adj_q: Vec<Vec<usize>>,
        multigraph: bool,
    ) -> Result<Self, Violation> {
        let graph = Self::from_parts_unchecked(d, adj_p, adj_q, multigraph);
        validate(&graph)?;
        Ok(graph)
    }

    /// Assembles a graph without any checks. Everything else in the crate
    /// relies on the invariants, so this stays private to the crate.
    pub(crate) fn from_parts_unchecked(
        d: usize,
        adj_p: Vec<Vec<usize>>,
        adj_q: Vec<Vec<usize>>,
        multigraph: bool,
    ) -> Self {
        Self { n: adj_p.len(), d, adj_p, adj_q, multigraph }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Number of edges, `n * d`.
    pub fn m(&self) -> usize {
        self.n * self.d
    }

    pub fn is_multigraph(&self) -> bool {
        self.multigraph
    }

    pub fn adj_p(&self) -> &[Vec<usize>] {
        &self.adj_p
    }

    pub fn adj_q(&self) -> &[Vec<usize>] {
        &self.adj_q
    }

    #[inline]
    pub fn neighbor_of_p(&self, p: usize, slot: usize) -> usize {
        self.adj_p[p][slot]
    }

    /// Slot of some occurrence of `q` in the row of `p`.
    pub fn slot_of(&self, p: usize, q: usize) -> Option<usize> {
        self.adj_p[p].iter().position(|&x| x == q)
    }

    pub fn has_edge(&self, p: usize, q: usize) -> bool {
        p < self.n && self.adj_p[p].contains(&q)
    }
}

fn check_rows(
    side: char,
    rows: &[Vec<usize>],
    n: usize,
    d: usize,
    multigraph: bool,
) -> Result<(), Violation> {
    if rows.len() != n {
        return Err(Violation::RowCount { side, expected: n, found: rows.len() });
    }
    let mut seen = vec![usize::MAX; n];
    for (row, entries) in rows.iter().enumerate() {
        if entries.len() != d {
            return Err(Violation::RowLength { side, row, found: entries.len(), d });
        }
        for &index in entries {
            if index >= n {
                return Err(Violation::IndexOutOfRange { side, row, index, n });
            }
            if !multigraph {
                if seen[index] == row {
                    return Err(Violation::RepeatedEntry { side, row, index });
                }
                seen[index] = row;
            }
        }
    }
    Ok(())
}

pub(crate) fn derive_adj_q(n: usize, adj_p: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut adj_q: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (p, row) in adj_p.iter().enumerate() {
        for &q in row {
            adj_q[q].push(p);
        }
    }
    adj_q
}

/// Checks every graph invariant, returning the first violation found.
pub fn validate(graph: &BipartiteRegularGraph) -> Result<(), Violation> {
    let n = graph.n;
    check_rows('P', &graph.adj_p, n, graph.d, graph.multigraph)?;
    check_rows('Q', &graph.adj_q, n, graph.d, graph.multigraph)?;

    // Symmetry: compare occurrence counts of every (p, q) pair. A per-row
    // scratch counter keeps this O(m).
    let mut count = vec![0usize; n];
    for p in 0..n {
        for &q in &graph.adj_p[p] {
            count[q] += 1;
        }
        for &q in &graph.adj_p[p] {
            if count[q] == 0 {
                continue;
            }
            let in_q = graph.adj_q[q].iter().filter(|&&x| x == p).count();
            if in_q != count[q] {
                return Err(Violation::Asymmetric { p, q, in_p: count[q], in_q });
            }
            count[q] = 0;
        }
    }
    // Every Q-side entry must be matched by a P-side entry; with equal row
    // lengths on both sides the P-side pass above already implies this, but
    // a Q row may still name a p whose row does not mention q.
    for q in 0..n {
        for &p in &graph.adj_q[q] {
            if !graph.adj_p[p].contains(&q) {
                let in_q = graph.adj_q[q].iter().filter(|&&x| x == p).count();
                return Err(Violation::Asymmetric { p, q, in_p: 0, in_q });
            }
        }
    }
    Ok(())
}

/// A (partial) matching between P and Q with both directions stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matching {
    match_p: Vec<Option<usize>>,
    match_q: Vec<Option<usize>>,
    size: usize,
}

impl Matching {
    pub fn empty(n: usize) -> Self {
        Self::with_sides(n, n)
    }

    /// Empty matching between sides of different sizes.
    pub fn with_sides(n_p: usize, n_q: usize) -> Self {
        Self { match_p: vec![None; n_p], match_q: vec![None; n_q], size: 0 }
    }

    /// Builds a matching from the P-side mate array alone. No consistency
    /// checks are made; a Q vertex claimed twice keeps its last claimant.
    /// Run [`verify_matching`] on the result.
    pub fn from_mates(match_p: Vec<Option<usize>>) -> Self {
        let n = match_p.len();
        let mut match_q = vec![None; n];
        for (p, q) in match_p.iter().enumerate() {
            if let Some(q) = *q {
                if q < n {
                    match_q[q] = Some(p);
                }
            }
        }
        let size = match_p.iter().filter(|m| m.is_some()).count();
        Self { match_p, match_q, size }
    }

    pub fn n(&self) -> usize {
        self.match_p.len()
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Unmatched P vertices.
    pub fn unmatched(&self) -> usize {
        self.n() - self.size
    }

    pub fn is_perfect(&self) -> bool {
        self.size == self.n() && self.size == self.match_q.len()
    }

    #[inline]
    pub fn mate_of_p(&self, p: usize) -> Option<usize> {
        self.match_p[p]
    }

    #[inline]
    pub fn mate_of_q(&self, q: usize) -> Option<usize> {
        self.match_q[q]
    }

    pub fn mates_p(&self) -> &[Option<usize>] {
        &self.match_p
    }

    pub fn mates_q(&self) -> &[Option<usize>] {
        &self.match_q
    }

    /// Iterates the matched pairs `(p, q)` in P order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.match_p.iter().enumerate().filter_map(|(p, q)| q.map(|q| (p, q)))
    }

    /// Points `p` at `q` and `q` at `p` without touching the size; used while
    /// rewiring an augmenting path.
    #[inline]
    pub(crate) fn set_pair(&mut self, p: usize, q: usize) {
        self.match_p[p] = Some(q);
        self.match_q[q] = Some(p);
    }

    #[inline]
    pub(crate) fn bump_size(&mut self) {
        self.size += 1;
    }
}

/// Reason a matching failed [`verify_matching`].
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MatchingViolation {
    #[error("matching covers {found} vertices per side, graph has {expected}")]
    WrongLength { expected: usize, found: usize },
    #[error("q={q} is matched more than once (p={first} and p={second})")]
    DoublyMatched { q: usize, first: usize, second: usize },
    #[error("p={p} points to q={q} which is out of range")]
    OutOfRange { p: usize, q: usize },
    #[error("p={p} and q={q} disagree about being matched")]
    Inconsistent { p: usize, q: usize },
    #[error("matched pair (p={p}, q={q}) is not an edge")]
    NotAnEdge { p: usize, q: usize },
    #[error("recorded size {recorded} but {counted} pairs are matched")]
    SizeMismatch { recorded: usize, counted: usize },
    #[error("matching has size {size} < {n}, not perfect")]
    NotPerfect { size: usize, n: usize },
}

/// Checks a matching against any bipartite adjacency (`adj_p[p]` lists the
/// Q-neighbours of p). Shared by the regular-graph and weighted-support paths
/// and the irregular inputs of the baselines. The Q side has
/// `matching.mates_q().len()` vertices.
pub fn verify_matching_adj(
    adj_p: &[Vec<usize>],
    matching: &Matching,
    require_perfect: bool,
) -> Result<(), MatchingViolation> {
    let n = adj_p.len();
    let n_q = matching.match_q.len();
    if matching.match_p.len() != n {
        return Err(MatchingViolation::WrongLength { expected: n, found: matching.match_p.len() });
    }
    let mut owner: Vec<Option<usize>> = vec![None; n_q];
    let mut counted = 0;
    for (p, &q) in matching.match_p.iter().enumerate() {
        let Some(q) = q else { continue };
        if q >= n_q {
            return Err(MatchingViolation::OutOfRange { p, q });
        }
        if let Some(first) = owner[q] {
            return Err(MatchingViolation::DoublyMatched { q, first, second: p });
        }
        owner[q] = Some(p);
        counted += 1;
    }
    for (p, q) in matching.pairs() {
        if matching.match_q[q] != Some(p) {
            return Err(MatchingViolation::Inconsistent { p, q });
        }
        if !adj_p[p].contains(&q) {
            return Err(MatchingViolation::NotAnEdge { p, q });
        }
    }
    for (q, &p) in matching.match_q.iter().enumerate() {
        if p.is_some() && owner[q] != p {
            return Err(MatchingViolation::Inconsistent { p: p.unwrap_or(usize::MAX), q });
        }
    }
    if counted != matching.size {
        return Err(MatchingViolation::SizeMismatch { recorded: matching.size, counted });
    }
    if require_perfect && (counted != n || counted != n_q) {
        return Err(MatchingViolation::NotPerfect { size: counted, n: n.max(n_q) });
    }
    Ok(())
}

pub fn verify_matching(
    graph: &BipartiteRegularGraph,
    matching: &Matching,
    require_perfect: bool,
) -> Result<(), MatchingViolation> {
    verify_matching_adj(&graph.adj_p, matching, require_perfect)
}

impl fmt::Display for BipartiteRegularGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-regular bipartite graph on 2x{} vertices", self.d, self.n)
    }
}
