//! The canonical lower-bound family G(d).
//!
//! P = P1 ‖ P2 and Q = Q1 ‖ Q2, each part of size 2d. A source-like vertex
//! `s` on the Q side is joined to d vertices of P1, a sink-like vertex `t` on
//! the P side to d vertices of Q2, and a hidden perfect matching M′ of size
//! d joins Q1 to P2. Every other edge stays inside (P1, Q1) or (P2, Q2), and
//! all degrees are d. As a bipartite graph with sides P ∪ {t} and Q ∪ {s}
//! this is d-regular on 4d + 1 vertices per side.
//!
//! Indices: P1 = 0..2d, P2 = 2d..4d, t = 4d on the P side; Q1 = 0..2d,
//! Q2 = 2d..4d, s = 4d on the Q side.

use rand::seq::SliceRandom;

use crate::graph::{BipartiteRegularGraph, Violation};
use crate::rng::{seeded, Purpose};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Part {
    P1,
    P2,
    Q1,
    Q2,
    /// Joined to d vertices of P1; lives on the Q side.
    S,
    /// Joined to d vertices of Q2; lives on the P side.
    T,
}

/// Index arithmetic for a canonical instance of degree `d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub d: usize,
}

impl Layout {
    pub fn new(d: usize) -> Self {
        Self { d }
    }

    /// Vertices per side of the embedding, `4d + 1`.
    pub fn side_len(&self) -> usize {
        4 * self.d + 1
    }

    /// P-side index of `t`.
    pub fn t(&self) -> usize {
        4 * self.d
    }

    /// Q-side index of `s`.
    pub fn s(&self) -> usize {
        4 * self.d
    }

    pub fn part_of_p(&self, p: usize) -> Part {
        let d = self.d;
        if p < 2 * d {
            Part::P1
        } else if p < 4 * d {
            Part::P2
        } else {
            Part::T
        }
    }

    pub fn part_of_q(&self, q: usize) -> Part {
        let d = self.d;
        if q < 2 * d {
            Part::Q1
        } else if q < 4 * d {
            Part::Q2
        } else {
            Part::S
        }
    }

    pub fn range(&self, part: Part) -> std::ops::Range<usize> {
        let d = self.d;
        match part {
            Part::P1 | Part::Q1 => 0..2 * d,
            Part::P2 | Part::Q2 => 2 * d..4 * d,
            Part::S | Part::T => 4 * d..4 * d + 1,
        }
    }

    /// Labels for every P-side then every Q-side index.
    pub fn labels(&self) -> (Vec<Part>, Vec<Part>) {
        let n = self.side_len();
        ((0..n).map(|p| self.part_of_p(p)).collect(), (0..n).map(|q| self.part_of_q(q)).collect())
    }

    /// Whether `(p, q)` may be an edge outside M′: s–P1, t–Q2, or inside a
    /// side pair.
    fn is_regular_pair(&self, p: usize, q: usize) -> bool {
        matches!(
            (self.part_of_p(p), self.part_of_q(q)),
            (Part::P1, Part::S) | (Part::T, Part::Q2) | (Part::P1, Part::Q1) | (Part::P2, Part::Q2)
        )
    }
}

/// A member of G(d) in its embedding as a d-regular bipartite graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalGraph {
    pub layout: Layout,
    pub graph: BipartiteRegularGraph,
    /// M′ as `(p in P2, q in Q1)` pairs.
    pub hidden: Vec<(usize, usize)>,
}

impl CanonicalGraph {
    pub fn is_hidden_edge(&self, p: usize, q: usize) -> bool {
        self.hidden.contains(&(p, q))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CanonicalError {
    #[error("degree must be at least 1")]
    ZeroDegree,
    #[error("expected {expected} rows, found {found}")]
    Shape { expected: usize, found: usize },
    #[error("s must be joined to {d} distinct P1 vertices")]
    SourceEdges { d: usize },
    #[error("t must be joined to {d} distinct Q2 vertices")]
    SinkEdges { d: usize },
    #[error("edge (p={p}, q={q}) crosses the side pairs")]
    CrossingEdge { p: usize, q: usize },
    #[error("vertex {side}{index} has degree above d")]
    Overfull { side: char, index: usize },
    #[error("only {free} free vertices in {part:?}, need {need}")]
    TooFewFree { part: Part, free: usize, need: usize },
    #[error("hidden matching must have exactly d edges from P2 to Q1 with distinct endpoints")]
    HiddenMatching,
    #[error("M′ edge (p={p}, q={q}) missing from the graph")]
    HiddenMissing { p: usize, q: usize },
    #[error("completion is not regular: {0}")]
    NotRegular(#[from] Violation),
}

/// Checks that `graph` with hidden matching `hidden` is a member of G(d).
pub fn validate_canonical(
    graph: &BipartiteRegularGraph,
    d: usize,
    hidden: &[(usize, usize)],
) -> Result<(), CanonicalError> {
    let layout = Layout::new(d);
    let n = layout.side_len();
    if graph.n() != n || graph.d() != d {
        return Err(CanonicalError::Shape { expected: n, found: graph.n() });
    }
    crate::graph::validate(graph)?;
    let mut s_nbrs = graph.adj_q()[layout.s()].clone();
    s_nbrs.sort_unstable();
    s_nbrs.dedup();
    if s_nbrs.len() != d || s_nbrs.iter().any(|&p| layout.part_of_p(p) != Part::P1) {
        return Err(CanonicalError::SourceEdges { d });
    }
    let mut t_nbrs = graph.adj_p()[layout.t()].clone();
    t_nbrs.sort_unstable();
    t_nbrs.dedup();
    if t_nbrs.len() != d || t_nbrs.iter().any(|&q| layout.part_of_q(q) != Part::Q2) {
        return Err(CanonicalError::SinkEdges { d });
    }
    check_hidden_shape(&layout, hidden)?;
    let mut remaining_hidden = hidden.to_vec();
    for (p, row) in graph.adj_p().iter().enumerate() {
        for &q in row {
            if layout.is_regular_pair(p, q) {
                continue;
            }
            match remaining_hidden.iter().position(|&e| e == (p, q)) {
                Some(i) => {
                    remaining_hidden.swap_remove(i);
                }
                None => return Err(CanonicalError::CrossingEdge { p, q }),
            }
        }
    }
    if let Some(&(p, q)) = remaining_hidden.first() {
        return Err(CanonicalError::HiddenMissing { p, q });
    }
    Ok(())
}

fn check_hidden_shape(layout: &Layout, hidden: &[(usize, usize)]) -> Result<(), CanonicalError> {
    let d = layout.d;
    if hidden.len() != d {
        return Err(CanonicalError::HiddenMatching);
    }
    let mut ps: Vec<usize> = hidden.iter().map(|e| e.0).collect();
    let mut qs: Vec<usize> = hidden.iter().map(|e| e.1).collect();
    ps.sort_unstable();
    ps.dedup();
    qs.sort_unstable();
    qs.dedup();
    let ok = ps.len() == d
        && qs.len() == d
        && hidden.iter().all(|&(p, q)| {
            layout.part_of_p(p) == Part::P2 && layout.part_of_q(q) == Part::Q1
        });
    if ok {
        Ok(())
    } else {
        Err(CanonicalError::HiddenMatching)
    }
}

/// Extends a partially revealed graph to a member of G(d).
///
/// `revealed[p]` lists the Q-neighbours of P-side vertex `p` (s and t edges
/// included). The revealed graph must join s to d distinct P1 vertices and
/// t to d distinct Q2 vertices, keep every other edge inside a side pair,
/// have all degrees at most d, and leave at least d free vertices in each of
/// Q1 and P2.
///
/// M′ joins the d lowest-index free Q1 vertices to the d lowest-index free
/// P2 vertices. The remaining deficits in each side pair are filled with new
/// edges; a max-flow keeps the result simple whenever that is possible, and
/// any deficit it cannot place is paired off greedily, lowest index first.
pub fn complete_canonical(d: usize, revealed: &[Vec<usize>]) -> Result<CanonicalGraph, CanonicalError> {
    if d == 0 {
        return Err(CanonicalError::ZeroDegree);
    }
    let layout = Layout::new(d);
    let n = layout.side_len();
    if revealed.len() != n {
        return Err(CanonicalError::Shape { expected: n, found: revealed.len() });
    }
    let mut deg_q = vec![0usize; n];
    for (p, row) in revealed.iter().enumerate() {
        if row.len() > d {
            return Err(CanonicalError::Overfull { side: 'P', index: p });
        }
        for &q in row {
            if q >= n {
                return Err(CanonicalError::Shape { expected: n, found: q + 1 });
            }
            deg_q[q] += 1;
            if !layout.is_regular_pair(p, q) {
                return Err(CanonicalError::CrossingEdge { p, q });
            }
        }
    }
    if let Some(q) = (0..n).find(|&q| deg_q[q] > d) {
        return Err(CanonicalError::Overfull { side: 'Q', index: q });
    }
    let mut t_row = revealed[layout.t()].clone();
    t_row.sort_unstable();
    t_row.dedup();
    if t_row.len() != d || revealed[layout.t()].len() != d {
        return Err(CanonicalError::SinkEdges { d });
    }
    let s_count: Vec<usize> = revealed.iter().map(|row| row.iter().filter(|&&q| q == layout.s()).count()).collect();
    if deg_q[layout.s()] != d || s_count.iter().any(|&c| c > 1) {
        return Err(CanonicalError::SourceEdges { d });
    }

    let mut adj: Vec<Vec<usize>> = revealed.to_vec();
    let free_q1: Vec<usize> = layout.range(Part::Q1).filter(|&q| deg_q[q] < d).collect();
    let free_p2: Vec<usize> = layout.range(Part::P2).filter(|&p| adj[p].len() < d).collect();
    if free_q1.len() < d {
        return Err(CanonicalError::TooFewFree { part: Part::Q1, free: free_q1.len(), need: d });
    }
    if free_p2.len() < d {
        return Err(CanonicalError::TooFewFree { part: Part::P2, free: free_p2.len(), need: d });
    }
    let hidden: Vec<(usize, usize)> = free_p2.iter().copied().zip(free_q1.iter().copied()).take(d).collect();
    for &(p, q) in &hidden {
        adj[p].push(q);
        deg_q[q] += 1;
    }

    for (pp, qp) in [(Part::P1, Part::Q1), (Part::P2, Part::Q2)] {
        fill_pair(&layout, &mut adj, &mut deg_q, pp, qp);
    }

    let multigraph = adj.iter().any(|row| {
        let mut r = row.clone();
        r.sort_unstable();
        r.windows(2).any(|w| w[0] == w[1])
    });
    let graph = BipartiteRegularGraph::from_adj_p(d, adj, multigraph)?;
    Ok(CanonicalGraph { layout, graph, hidden })
}

fn fill_pair(layout: &Layout, adj: &mut [Vec<usize>], deg_q: &mut [usize], pp: Part, qp: Part) {
    let d = layout.d;
    let ps: Vec<usize> = layout.range(pp).filter(|&p| adj[p].len() < d).collect();
    let qs: Vec<usize> = layout.range(qp).filter(|&q| deg_q[q] < d).collect();
    if ps.is_empty() && qs.is_empty() {
        return;
    }
    // Nodes: 0 source, 1 sink, then ps, then qs.
    let mut flow = FlowNet::new(2 + ps.len() + qs.len());
    for (i, &p) in ps.iter().enumerate() {
        flow.add_edge(0, 2 + i, (d - adj[p].len()) as i64);
    }
    for (j, &q) in qs.iter().enumerate() {
        flow.add_edge(2 + ps.len() + j, 1, (d - deg_q[q]) as i64);
    }
    let mut pair_edges = Vec::new();
    for (i, &p) in ps.iter().enumerate() {
        for (j, &q) in qs.iter().enumerate() {
            if !adj[p].contains(&q) {
                pair_edges.push((flow.add_edge(2 + i, 2 + ps.len() + j, 1), p, q));
            }
        }
    }
    flow.max_flow(0, 1);
    for (edge, p, q) in pair_edges {
        if flow.flow_on(edge) > 0 {
            adj[p].push(q);
            deg_q[q] += 1;
        }
    }
    // Whatever the flow could not place becomes parallel edges.
    let mut pi = 0;
    let mut qi = 0;
    while pi < ps.len() && qi < qs.len() {
        let (p, q) = (ps[pi], qs[qi]);
        if adj[p].len() == d {
            pi += 1;
        } else if deg_q[q] == d {
            qi += 1;
        } else {
            adj[p].push(q);
            deg_q[q] += 1;
        }
    }
}

/// Small Dinic max-flow over unit and deficit capacities.
struct FlowNet {
    head: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<i64>,
    level: Vec<i32>,
    iter: Vec<usize>,
}

impl FlowNet {
    fn new(nodes: usize) -> Self {
        Self { head: vec![Vec::new(); nodes], to: Vec::new(), cap: Vec::new(), level: vec![0; nodes], iter: vec![0; nodes] }
    }

    fn add_edge(&mut self, from: usize, to: usize, cap: i64) -> usize {
        let id = self.to.len();
        self.head[from].push(id);
        self.to.push(to);
        self.cap.push(cap);
        self.head[to].push(id + 1);
        self.to.push(from);
        self.cap.push(0);
        id
    }

    fn flow_on(&self, edge: usize) -> i64 {
        self.cap[edge + 1]
    }

    fn bfs(&mut self, s: usize, t: usize) -> bool {
        self.level.iter_mut().for_each(|l| *l = -1);
        self.level[s] = 0;
        let mut queue = std::collections::VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &e in &self.head[u] {
                let v = self.to[e];
                if self.cap[e] > 0 && self.level[v] < 0 {
                    self.level[v] = self.level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        self.level[t] >= 0
    }

    fn dfs(&mut self, u: usize, t: usize, pushed: i64) -> i64 {
        if u == t {
            return pushed;
        }
        while self.iter[u] < self.head[u].len() {
            let e = self.head[u][self.iter[u]];
            let v = self.to[e];
            if self.cap[e] > 0 && self.level[v] == self.level[u] + 1 {
                let got = self.dfs(v, t, pushed.min(self.cap[e]));
                if got > 0 {
                    self.cap[e] -= got;
                    self.cap[e ^ 1] += got;
                    return got;
                }
            }
            self.iter[u] += 1;
        }
        0
    }

    fn max_flow(&mut self, s: usize, t: usize) -> i64 {
        let mut total = 0;
        while self.bfs(s, t) {
            self.iter.iter_mut().for_each(|i| *i = 0);
            loop {
                let f = self.dfs(s, t, i64::MAX);
                if f == 0 {
                    break;
                }
                total += f;
            }
        }
        total
    }
}

/// Revealed rows at the start of a game: s joined to the first d vertices
/// of P1 and t to the first d vertices of Q2.
pub fn initial_reveal(d: usize) -> Vec<Vec<usize>> {
    let layout = Layout::new(d);
    let mut rows = vec![Vec::new(); layout.side_len()];
    for p in layout.range(Part::P1).take(d) {
        rows[p].push(layout.s());
    }
    rows[layout.t()] = layout.range(Part::Q2).take(d).collect();
    rows
}

/// A random member of G(d): the completion of the initial reveal, relabelled
/// by independent random permutations inside P1, P2, Q1 and Q2, with every
/// adjacency row shuffled.
pub fn gen_canonical(d: usize, seed: u64) -> Result<CanonicalGraph, CanonicalError> {
    let base = complete_canonical(d, &initial_reveal(d))?;
    let layout = base.layout;
    let n = layout.side_len();
    let mut rng = seeded(seed, Purpose::Generate);
    let mut relabel = |parts: [Part; 2]| {
        let mut map: Vec<usize> = (0..n).collect();
        for part in parts {
            let mut image: Vec<usize> = layout.range(part).collect();
            image.shuffle(&mut rng);
            for (src, dst) in layout.range(part).zip(image) {
                map[src] = dst;
            }
        }
        map
    };
    let map_p = relabel([Part::P1, Part::P2]);
    let map_q = relabel([Part::Q1, Part::Q2]);
    let mut adj = vec![Vec::new(); n];
    for (p, row) in base.graph.adj_p().iter().enumerate() {
        adj[map_p[p]] = row.iter().map(|&q| map_q[q]).collect();
    }
    for row in adj.iter_mut() {
        row.shuffle(&mut rng);
    }
    let hidden = base.hidden.iter().map(|&(p, q)| (map_p[p], map_q[q])).collect();
    let graph = BipartiteRegularGraph::from_adj_p(d, adj, base.graph.is_multigraph())?;
    Ok(CanonicalGraph { layout, graph, hidden })
}
