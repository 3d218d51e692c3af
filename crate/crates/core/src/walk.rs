//! Perfect matchings by random-walk augmentation.
//!
//! Given a partial matching M leaving k vertices unmatched per side, the
//! matching graph H orients every edge from P to Q, contracts each matched
//! pair into a supernode, and adds a source feeding every unmatched P vertex
//! and a sink fed by every unmatched Q vertex (d parallel edges each). Any
//! source-to-sink path in H is an augmenting path for M, and a uniform random
//! walk from the source reaches the sink in at most `2 + n/k` expected steps.
//!
//! H is never built. Each step is answered from the adjacency rows and the
//! current matching:
//!
//! * source: uniform unmatched P vertex,
//! * free P vertex `p`: uniform slot of `p`'s row,
//! * supernode of matched `q`: uniform slot of `mate(q)`'s row except the
//!   slot holding the matched edge,
//! * free Q vertex: the sink.
//!
//! The walk erases loops as it goes. Only supernodes can repeat (the source
//! has no in-edges, free P vertices are entered only from the source, free Q
//! vertices lead straight to the sink), so erasure keys on the supernode's
//! Q index.

use std::collections::HashMap;

use rand::Rng;

use crate::graph::{verify_matching_adj, BipartiteRegularGraph, Matching, MatchingViolation};

/// A vertex of the implicit matching graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HVertex {
    Source,
    Sink,
    FreeP(usize),
    FreeQ(usize),
    /// Contracted matched pair `(mate(q), q)`, identified by its Q side.
    Super(usize),
}

/// Row-level sampling primitives the walk needs from its host graph.
///
/// `slot` is a position in the row of a P vertex; it identifies one edge
/// occurrence even in a multigraph.
pub trait RowSampler {
    /// Vertices per side.
    fn side_len(&self) -> usize;

    /// Draws a slot of `p`'s row proportionally to edge weight; returns
    /// `(slot, q)`, or `None` for a row without weight.
    fn sample_row<R: Rng + ?Sized>(&self, p: usize, rng: &mut R) -> Option<(usize, usize)>;

    /// Like [`RowSampler::sample_row`] with `excluded` removed from the
    /// distribution. `None` if nothing else carries weight.
    fn sample_row_excluding<R: Rng + ?Sized>(
        &self,
        p: usize,
        excluded: usize,
        rng: &mut R,
    ) -> Option<(usize, usize)>;

    fn column_at(&self, p: usize, slot: usize) -> Option<usize>;

    /// A live slot of `p`'s row holding `q`.
    fn find_slot(&self, p: usize, q: usize) -> Option<usize>;

    /// Q-neighbours of every P vertex, for verification.
    fn support_rows(&self) -> Vec<Vec<usize>>;
}

impl RowSampler for BipartiteRegularGraph {
    fn side_len(&self) -> usize {
        self.n()
    }

    #[inline]
    fn sample_row<R: Rng + ?Sized>(&self, p: usize, rng: &mut R) -> Option<(usize, usize)> {
        let slot = rng.gen_range(0..self.d());
        Some((slot, self.neighbor_of_p(p, slot)))
    }

    #[inline]
    fn sample_row_excluding<R: Rng + ?Sized>(
        &self,
        p: usize,
        excluded: usize,
        rng: &mut R,
    ) -> Option<(usize, usize)> {
        let d = self.d();
        if d < 2 {
            return None;
        }
        // Uniform over the d-1 other slots: draw from a range one shorter
        // and step over the excluded slot.
        let mut slot = rng.gen_range(0..d - 1);
        if slot >= excluded {
            slot += 1;
        }
        Some((slot, self.neighbor_of_p(p, slot)))
    }

    fn column_at(&self, p: usize, slot: usize) -> Option<usize> {
        self.adj_p().get(p)?.get(slot).copied()
    }

    fn find_slot(&self, p: usize, q: usize) -> Option<usize> {
        self.slot_of(p, q)
    }

    fn support_rows(&self) -> Vec<Vec<usize>> {
        self.adj_p().to_vec()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WalkError {
    #[error("phase index j={j} out of range for n={n}")]
    PhaseOutOfRange { n: usize, j: usize },
    #[error("the matching is already perfect")]
    AlreadyPerfect,
    #[error("the sink has no out-edges")]
    SampleFromSink,
    #[error("{vertex:?} is not a vertex of the current matching graph")]
    NotInGraph { vertex: HVertex },
    #[error("supernode of q={q} has no out-edges")]
    DeadEnd { q: usize },
    #[error("row of p={p} has no out-edges")]
    EmptyRow { p: usize },
    #[error("walk budget must be at least 1")]
    ZeroBudget,
    #[error("malformed walk: {0}")]
    MalformedWalk(String),
    #[error("invalid augmenting path: {0}")]
    InvalidPath(String),
    #[error("invalid starting matching: {0}")]
    InvalidMatching(#[from] MatchingViolation),
    #[error("graph must have n >= 1 and d >= 1")]
    DegenerateGraph,
    #[error("internal error: global step cap of {cap} exceeded")]
    StepCapExceeded { cap: u64 },
}

/// Step budget for phase `j`: `ceil(2 * (2 + n / (n - j)))`.
pub fn budget(n: usize, j: usize) -> Result<u64, WalkError> {
    if j >= n {
        return Err(WalkError::PhaseOutOfRange { n, j });
    }
    let (n, k) = (n as u64, (n - j) as u64);
    Ok(4 + (2 * n).div_ceil(k))
}

/// Global step cap for the untruncated variant: `10^4 * n * (ceil(ln n) + 1)`.
pub fn step_cap(n: usize) -> u64 {
    let ln = (n.max(1) as f64).ln().ceil() as u64;
    10_000 * n as u64 * (ln + 1)
}

/// A simple source-to-sink path in H, with the row slot used to leave every
/// vertex that has a P side (the free P vertex and each supernode).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AugmentingPath {
    vertices: Vec<HVertex>,
    slots: Vec<usize>,
}

impl AugmentingPath {
    /// Recovers slots for a bare vertex sequence by scanning rows. Checking
    /// the path against the matching is left to [`WalkMatcher::augment`].
    pub fn from_vertices<G: RowSampler>(
        graph: &G,
        matching: &Matching,
        vertices: Vec<HVertex>,
    ) -> Result<Self, WalkError> {
        let mut slots = Vec::new();
        for pair in vertices.windows(2) {
            let from_p = match pair[0] {
                HVertex::FreeP(p) => p,
                HVertex::Super(q) => matching
                    .mate_of_q(q)
                    .ok_or_else(|| WalkError::InvalidPath(format!("q={q} is not matched")))?,
                _ => continue,
            };
            let to_q = match pair[1] {
                HVertex::FreeQ(q) | HVertex::Super(q) => q,
                other => return Err(WalkError::InvalidPath(format!("unexpected {other:?}"))),
            };
            let slot = graph
                .find_slot(from_p, to_q)
                .ok_or_else(|| WalkError::InvalidPath(format!("no edge ({from_p}, {to_q})")))?;
            slots.push(slot);
        }
        Ok(Self { vertices, slots })
    }

    pub fn vertices(&self) -> &[HVertex] {
        &self.vertices
    }

    /// Number of H edges on the path.
    pub fn len(&self) -> usize {
        self.vertices.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WalkResult {
    Success(AugmentingPath),
    Fail,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkOutcome {
    pub result: WalkResult,
    /// Number of out-edge samples taken, the sink step included.
    pub steps_used: u64,
}

impl WalkOutcome {
    pub fn is_success(&self) -> bool {
        matches!(self.result, WalkResult::Success(_))
    }
}

/// Per-augmentation counters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PhaseStats {
    /// Budget per walk; `None` for untruncated walks.
    pub budget: Option<u64>,
    /// Failed walks before the successful one.
    pub restarts: u64,
    pub steps: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct WalkStats {
    pub phases: Vec<PhaseStats>,
    pub total_steps: u64,
    pub total_restarts: u64,
}

impl WalkStats {
    pub fn augmentations(&self) -> usize {
        self.phases.len()
    }

    fn record(&mut self, phase: PhaseStats) {
        self.total_steps += phase.steps;
        self.total_restarts += phase.restarts;
        self.phases.push(phase);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WalkMode {
    /// Budgeted walks restarted until success.
    Truncated,
    /// One unbounded walk per augmentation, guarded by [`step_cap`].
    Untruncated,
}

const NO_SLOT: usize = usize::MAX;

/// Matching state plus the bookkeeping the walk needs: the slot of every
/// matched edge, the list of unmatched P vertices, and scratch space for
/// online loop erasure.
#[derive(Debug, Clone)]
pub struct WalkMatcher<'g, G: RowSampler> {
    graph: &'g G,
    matching: Matching,
    matched_slot: Vec<usize>,
    free_p: Vec<usize>,
    free_pos: Vec<usize>,
    stack: Vec<(HVertex, usize)>,
    seen_epoch: Vec<u32>,
    seen_pos: Vec<usize>,
    epoch: u32,
}

impl<'g, G: RowSampler> WalkMatcher<'g, G> {
    pub fn new(graph: &'g G) -> Self {
        let n = graph.side_len();
        Self {
            graph,
            matching: Matching::empty(n),
            matched_slot: vec![NO_SLOT; n],
            free_p: (0..n).collect(),
            free_pos: (0..n).collect(),
            stack: Vec::new(),
            seen_epoch: vec![0; n],
            seen_pos: vec![0; n],
            epoch: 0,
        }
    }

    /// Starts from an existing matching, which must be valid for `graph`.
    pub fn with_matching(graph: &'g G, matching: Matching) -> Result<Self, WalkError> {
        verify_matching_adj(&graph.support_rows(), &matching, false)?;
        let mut state = Self::new(graph);
        state.free_p.clear();
        for p in 0..graph.side_len() {
            match matching.mate_of_p(p) {
                Some(q) => {
                    state.matched_slot[p] = graph.find_slot(p, q).ok_or(
                        WalkError::InvalidMatching(MatchingViolation::NotAnEdge { p, q }),
                    )?;
                }
                None => {
                    state.free_pos[p] = state.free_p.len();
                    state.free_p.push(p);
                }
            }
        }
        state.matching = matching;
        Ok(state)
    }

    pub fn graph(&self) -> &'g G {
        self.graph
    }

    pub fn matching(&self) -> &Matching {
        &self.matching
    }

    pub fn into_matching(self) -> Matching {
        self.matching
    }

    /// Slot of the matched edge in the row of matched vertex `p`.
    pub fn matched_slot(&self, p: usize) -> Option<usize> {
        self.matching.mate_of_p(p).map(|_| self.matched_slot[p])
    }

    fn classify_q(&self, q: usize) -> HVertex {
        if self.matching.mate_of_q(q).is_some() {
            HVertex::Super(q)
        } else {
            HVertex::FreeQ(q)
        }
    }

    /// Whether `v` is a vertex of H for the current matching.
    pub fn contains(&self, v: HVertex) -> bool {
        let n = self.graph.side_len();
        match v {
            HVertex::Source | HVertex::Sink => true,
            HVertex::FreeP(p) => p < n && self.matching.mate_of_p(p).is_none(),
            HVertex::FreeQ(q) => q < n && self.matching.mate_of_q(q).is_none(),
            HVertex::Super(q) => q < n && self.matching.mate_of_q(q).is_some(),
        }
    }

    /// One step of the walk: the head of a uniformly random out-edge of `v`,
    /// together with the row slot used (`NO_SLOT` when no row was read).
    #[inline]
    fn step<R: Rng + ?Sized>(&self, v: HVertex, rng: &mut R) -> Result<(HVertex, usize), WalkError> {
        match v {
            HVertex::Source => {
                if self.free_p.is_empty() {
                    return Err(WalkError::AlreadyPerfect);
                }
                // Every free P vertex has the same number of parallel edges
                // from the source, so picking one uniformly is exact.
                let p = self.free_p[rng.gen_range(0..self.free_p.len())];
                Ok((HVertex::FreeP(p), NO_SLOT))
            }
            HVertex::FreeP(p) => {
                let (slot, q) = self.graph.sample_row(p, rng).ok_or(WalkError::EmptyRow { p })?;
                Ok((self.classify_q(q), slot))
            }
            HVertex::Super(q) => {
                let u = self.matching.mate_of_q(q).ok_or(WalkError::NotInGraph { vertex: v })?;
                let (slot, next) = self
                    .graph
                    .sample_row_excluding(u, self.matched_slot[u], rng)
                    .ok_or(WalkError::DeadEnd { q })?;
                Ok((self.classify_q(next), slot))
            }
            HVertex::FreeQ(_) => Ok((HVertex::Sink, NO_SLOT)),
            HVertex::Sink => Err(WalkError::SampleFromSink),
        }
    }

    /// Samples the head of a uniformly random out-edge of `v` in H.
    pub fn sample_out_edge<R: Rng + ?Sized>(
        &self,
        v: HVertex,
        rng: &mut R,
    ) -> Result<HVertex, WalkError> {
        if !self.contains(v) {
            return Err(WalkError::NotInGraph { vertex: v });
        }
        self.step(v, rng).map(|(next, _)| next)
    }

    /// Random walk from the source for at most `budget` steps (`None` for no
    /// limit), erasing loops online.
    pub fn truncated_walk<R: Rng + ?Sized>(
        &mut self,
        budget: Option<u64>,
        rng: &mut R,
    ) -> Result<WalkOutcome, WalkError> {
        self.walk_inner(budget, rng, None)
    }

    /// As [`WalkMatcher::truncated_walk`], also recording every vertex
    /// visited (before erasure) into `trace`, starting with the source.
    pub fn truncated_walk_traced<R: Rng + ?Sized>(
        &mut self,
        budget: Option<u64>,
        rng: &mut R,
        trace: &mut Vec<HVertex>,
    ) -> Result<WalkOutcome, WalkError> {
        trace.clear();
        trace.push(HVertex::Source);
        self.walk_inner(budget, rng, Some(trace))
    }

    fn walk_inner<R: Rng + ?Sized>(
        &mut self,
        budget: Option<u64>,
        rng: &mut R,
        mut trace: Option<&mut Vec<HVertex>>,
    ) -> Result<WalkOutcome, WalkError> {
        if budget == Some(0) {
            return Err(WalkError::ZeroBudget);
        }
        if self.matching.is_perfect() {
            return Err(WalkError::AlreadyPerfect);
        }
        let limit = budget.unwrap_or(u64::MAX);
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.seen_epoch.iter_mut().for_each(|e| *e = 0);
            self.epoch = 1;
        }
        let epoch = self.epoch;

        let mut stack = std::mem::take(&mut self.stack);
        stack.clear();
        stack.push((HVertex::Source, NO_SLOT));
        let mut current = HVertex::Source;
        let mut steps = 0u64;
        let outcome = loop {
            if steps == limit {
                break WalkOutcome { result: WalkResult::Fail, steps_used: steps };
            }
            let (next, slot) = match self.step(current, rng) {
                Ok(s) => s,
                Err(e) => {
                    self.stack = stack;
                    return Err(e);
                }
            };
            steps += 1;
            if let Some(t) = trace.as_deref_mut() {
                t.push(next);
            }
            if let Some(top) = stack.last_mut() {
                top.1 = slot;
            }
            match next {
                HVertex::Sink => {
                    stack.push((next, NO_SLOT));
                    let path = AugmentingPath {
                        vertices: stack.iter().map(|&(v, _)| v).collect(),
                        slots: stack
                            .iter()
                            .filter(|(v, _)| matches!(v, HVertex::FreeP(_) | HVertex::Super(_)))
                            .map(|&(_, s)| s)
                            .collect(),
                    };
                    break WalkOutcome { result: WalkResult::Success(path), steps_used: steps };
                }
                HVertex::Super(q) if self.seen_epoch[q] == epoch => {
                    // Loop closed: cut back to the first visit of this supernode.
                    let keep = self.seen_pos[q] + 1;
                    for &(v, _) in &stack[keep..] {
                        if let HVertex::Super(x) = v {
                            self.seen_epoch[x] = 0;
                        }
                    }
                    stack.truncate(keep);
                }
                HVertex::Super(q) => {
                    self.seen_epoch[q] = epoch;
                    self.seen_pos[q] = stack.len();
                    stack.push((next, NO_SLOT));
                }
                _ => stack.push((next, NO_SLOT)),
            }
            current = next;
        };
        self.stack = stack;
        Ok(outcome)
    }

    /// Flips the matching along `path`; the size grows by exactly one.
    pub fn augment(&mut self, path: &AugmentingPath) -> Result<(), WalkError> {
        self.check_path(path)?;
        let v = &path.vertices;
        let last = v.len() - 2;
        let HVertex::FreeP(p0) = v[1] else { unreachable!() };
        let mut prev_p = p0;
        for (i, vertex) in v[2..=last].iter().enumerate() {
            let q = match *vertex {
                HVertex::Super(q) | HVertex::FreeQ(q) => q,
                _ => unreachable!(),
            };
            let old_mate = self.matching.mate_of_q(q);
            self.matching.set_pair(prev_p, q);
            self.matched_slot[prev_p] = path.slots[i];
            if let Some(u) = old_mate {
                prev_p = u;
            }
        }
        // p0 left the free list; every other P vertex on the path stays matched.
        let pos = self.free_pos[p0];
        let moved = *self.free_p.last().expect("p0 is free");
        self.free_p.swap_remove(pos);
        if moved != p0 {
            self.free_pos[moved] = pos;
        }
        self.matching.bump_size();
        Ok(())
    }

    fn check_path(&self, path: &AugmentingPath) -> Result<(), WalkError> {
        let bad = |msg: String| Err(WalkError::InvalidPath(msg));
        let v = &path.vertices;
        if v.len() < 4 || v[0] != HVertex::Source || v[v.len() - 1] != HVertex::Sink {
            return bad("path must run Source, FreeP, .., FreeQ, Sink".into());
        }
        let last = v.len() - 2;
        let HVertex::FreeP(p0) = v[1] else {
            return bad(format!("second vertex {:?} is not a free P vertex", v[1]));
        };
        if !matches!(v[last], HVertex::FreeQ(_)) {
            return bad(format!("penultimate vertex {:?} is not a free Q vertex", v[last]));
        }
        if path.slots.len() != last - 1 {
            return bad(format!("expected {} slots, got {}", last - 1, path.slots.len()));
        }
        let mut seen = HashMap::new();
        let mut from_p = p0;
        for (i, &vertex) in v[1..=last].iter().enumerate() {
            if !self.contains(vertex) {
                return bad(format!("{vertex:?} not in the matching graph"));
            }
            if i == 0 {
                continue;
            }
            let q = match vertex {
                HVertex::Super(q) if i + 1 < last => q,
                HVertex::FreeQ(q) if i + 1 == last => q,
                other => return bad(format!("unexpected {other:?} at position {}", i + 1)),
            };
            if seen.insert(q, i).is_some() {
                return bad(format!("q={q} visited twice"));
            }
            let slot = path.slots[i - 1];
            if self.graph.column_at(from_p, slot) != Some(q) {
                return bad(format!("slot {slot} of p={from_p} does not hold q={q}"));
            }
            if self.matching.mate_of_p(from_p).is_some() && self.matched_slot[from_p] == slot {
                return bad(format!("slot {slot} of p={from_p} is its matched edge"));
            }
            if let HVertex::Super(q) = vertex {
                from_p = self.matching.mate_of_q(q).expect("supernode is matched");
            }
        }
        Ok(())
    }

    /// Augments until the matching reaches `target` size, collecting stats.
    pub fn grow_to<R: Rng + ?Sized>(
        &mut self,
        target: usize,
        mode: WalkMode,
        cap: Option<u64>,
        rng: &mut R,
    ) -> Result<WalkStats, WalkError> {
        let n = self.graph.side_len();
        let target = target.min(n);
        let mut stats = WalkStats::default();
        let mut spent = 0u64;
        while self.matching.size() < target {
            let j = self.matching.size();
            let phase_budget = match mode {
                WalkMode::Truncated => Some(budget(n, j)?),
                WalkMode::Untruncated => None,
            };
            let mut phase = PhaseStats { budget: phase_budget, ..PhaseStats::default() };
            loop {
                let allowed = match (phase_budget, cap) {
                    (Some(b), Some(c)) => Some(b.min(c.saturating_sub(spent))),
                    (Some(b), None) => Some(b),
                    (None, Some(c)) => Some(c.saturating_sub(spent)),
                    (None, None) => None,
                };
                if allowed == Some(0) {
                    return Err(WalkError::StepCapExceeded { cap: cap.unwrap_or(0) });
                }
                let outcome = self.truncated_walk(allowed, rng)?;
                phase.steps += outcome.steps_used;
                spent += outcome.steps_used;
                match outcome.result {
                    WalkResult::Success(path) => {
                        self.augment(&path)?;
                        break;
                    }
                    WalkResult::Fail if phase_budget.is_some() && allowed == phase_budget => {
                        phase.restarts += 1;
                    }
                    WalkResult::Fail => {
                        return Err(WalkError::StepCapExceeded { cap: cap.unwrap_or(0) });
                    }
                }
            }
            stats.record(phase);
        }
        Ok(stats)
    }
}

/// Post-hoc loop erasure of a full walk `Source, .., Sink`.
///
/// Keeps the current prefix on a stack with an index from supernode to stack
/// position; revisiting a supernode truncates back to its first occurrence.
pub fn loop_erase(steps: &[HVertex]) -> Result<Vec<HVertex>, WalkError> {
    let bad = |msg: String| Err(WalkError::MalformedWalk(msg));
    if steps.first() != Some(&HVertex::Source) || steps.last() != Some(&HVertex::Sink) {
        return bad("walk must start at Source and end at Sink".into());
    }
    for pair in steps.windows(2) {
        let ok = matches!(
            (pair[0], pair[1]),
            (HVertex::Source, HVertex::FreeP(_))
                | (HVertex::FreeP(_), HVertex::FreeQ(_) | HVertex::Super(_))
                | (HVertex::Super(_), HVertex::FreeQ(_) | HVertex::Super(_))
                | (HVertex::FreeQ(_), HVertex::Sink)
        );
        if !ok {
            return bad(format!("{:?} -> {:?} is not an edge kind of H", pair[0], pair[1]));
        }
    }
    let mut path: Vec<HVertex> = Vec::with_capacity(steps.len());
    let mut position: HashMap<usize, usize> = HashMap::new();
    for &v in steps {
        if let HVertex::Super(q) = v {
            if let Some(&first) = position.get(&q) {
                for dropped in path.drain(first + 1..) {
                    if let HVertex::Super(x) = dropped {
                        position.remove(&x);
                    }
                }
                continue;
            }
            position.insert(q, path.len());
        }
        path.push(v);
    }
    Ok(path)
}

/// Finds a perfect matching of a d-regular bipartite graph.
///
/// For `d = 1` the adjacency array already is the matching and no walk is
/// run. Otherwise one augmentation per phase `j = 0..n`, each by walks of
/// budget [`budget`]`(n, j)` restarted until one succeeds (or, in
/// [`WalkMode::Untruncated`], a single walk under a global [`step_cap`]).
pub fn find_perfect_matching<R: Rng + ?Sized>(
    graph: &BipartiteRegularGraph,
    rng: &mut R,
    mode: WalkMode,
) -> Result<(Matching, WalkStats), WalkError> {
    let n = graph.n();
    if n == 0 || graph.d() == 0 || graph.adj_p().len() != n {
        return Err(WalkError::DegenerateGraph);
    }
    if graph.d() == 1 {
        let mates = graph.adj_p().iter().map(|row| Some(row[0])).collect();
        return Ok((Matching::from_mates(mates), WalkStats::default()));
    }
    let cap = match mode {
        WalkMode::Truncated => None,
        WalkMode::Untruncated => Some(step_cap(n)),
    };
    let mut state = WalkMatcher::new(graph);
    let stats = state.grow_to(n, mode, cap, rng)?;
    Ok((state.into_matching(), stats))
}

/// The n-th harmonic number.
pub fn harmonic(n: usize) -> f64 {
    (1..=n).map(|i| 1.0 / i as f64).sum()
}
