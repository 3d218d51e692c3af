//! Adaptive adversary for deterministic probing algorithms on G(d).
//!
//! A prober asks for "a new neighbour of u". While evasive, the adversary
//! answers with the lowest-index free vertex in u's side pair that is not
//! yet adjacent to u, so no M′ edge is ever shown. Once Q1 or P2 would have
//! at most d free vertices left, the adversary commits to a completion of
//! everything revealed so far and answers from it for the rest of the game.

use std::fmt;

use crate::canonical::{complete_canonical, initial_reveal, CanonicalError, CanonicalGraph, Layout, Part};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Vertex {
    P(usize),
    Q(usize),
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Vertex::P(i) => write!(f, "P{i}"),
            Vertex::Q(i) => write!(f, "Q{i}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Evasive,
    NonEvasive,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Evasive => "evasive",
            Mode::NonEvasive => "nonevasive",
        }
    }
}

/// One answered query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Answer {
    pub query: Vertex,
    pub reply: Vertex,
    /// Mode in force when the reply was chosen.
    pub mode: Mode,
    /// Whether the revealed edge belongs to M′.
    pub hidden: bool,
}

impl Answer {
    /// The revealed edge as `(p, q)`.
    pub fn edge(&self) -> (usize, usize) {
        match (self.query, self.reply) {
            (Vertex::P(p), Vertex::Q(q)) | (Vertex::Q(q), Vertex::P(p)) => (p, q),
            _ => unreachable!("answers always join opposite sides"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GameError {
    #[error("vertex {0} is not in the instance")]
    UnknownVertex(Vertex),
    #[error("probe {position}: vertex {vertex} already has all d neighbours revealed")]
    Saturated { vertex: Vertex, position: u64 },
    #[error("completion failed: {0}")]
    Completion(#[from] CanonicalError),
}

/// The adversary's state: revealed edges, mode and, once committed, the
/// graph it answers from.
#[derive(Debug, Clone)]
pub struct CanonicalInstance {
    layout: Layout,
    adj_p: Vec<Vec<usize>>,
    adj_q: Vec<Vec<usize>>,
    mode: Mode,
    committed: Option<CanonicalGraph>,
    transcript: Vec<Answer>,
}

impl CanonicalInstance {
    /// Starts a game on G(d) with the s and t edges already revealed.
    pub fn new(d: usize) -> Self {
        assert!(d >= 1, "degree must be at least 1");
        let layout = Layout::new(d);
        let adj_p = initial_reveal(d);
        let mut adj_q = vec![Vec::new(); layout.side_len()];
        for (p, row) in adj_p.iter().enumerate() {
            for &q in row {
                adj_q[q].push(p);
            }
        }
        Self { layout, adj_p, adj_q, mode: Mode::Evasive, committed: None, transcript: Vec::new() }
    }

    pub fn d(&self) -> usize {
        self.layout.d
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn probe_count(&self) -> u64 {
        self.transcript.len() as u64
    }

    pub fn transcript(&self) -> &[Answer] {
        &self.transcript
    }

    pub fn committed(&self) -> Option<&CanonicalGraph> {
        self.committed.as_ref()
    }

    /// Revealed P-side rows, including the initial s and t edges.
    pub fn revealed_rows(&self) -> &[Vec<usize>] {
        &self.adj_p
    }

    /// Neighbours of `u` revealed so far, in reveal order.
    pub fn revealed(&self, u: Vertex) -> Result<&[usize], GameError> {
        self.check(u)?;
        Ok(match u {
            Vertex::P(p) => &self.adj_p[p],
            Vertex::Q(q) => &self.adj_q[q],
        })
    }

    fn check(&self, u: Vertex) -> Result<(), GameError> {
        let i = match u {
            Vertex::P(i) | Vertex::Q(i) => i,
        };
        if i < self.layout.side_len() {
            Ok(())
        } else {
            Err(GameError::UnknownVertex(u))
        }
    }

    fn free_in(&self, part: Part) -> usize {
        let d = self.layout.d;
        let side = match part {
            Part::P1 | Part::P2 | Part::T => &self.adj_p,
            Part::Q1 | Part::Q2 | Part::S => &self.adj_q,
        };
        self.layout.range(part).filter(|&i| side[i].len() < d).count()
    }

    fn evasive_reply(&self, u: Vertex) -> Option<Vertex> {
        let d = self.layout.d;
        match u {
            Vertex::P(p) => {
                let part = match self.layout.part_of_p(p) {
                    Part::P1 => Part::Q1,
                    _ => Part::Q2,
                };
                self.layout
                    .range(part)
                    .find(|&q| self.adj_q[q].len() < d && !self.adj_p[p].contains(&q))
                    .map(Vertex::Q)
            }
            Vertex::Q(q) => {
                let part = match self.layout.part_of_q(q) {
                    Part::Q1 => Part::P1,
                    _ => Part::P2,
                };
                self.layout
                    .range(part)
                    .find(|&p| self.adj_p[p].len() < d && !self.adj_q[q].contains(&p))
                    .map(Vertex::P)
            }
        }
    }

    fn commit(&mut self) -> Result<(), GameError> {
        self.committed = Some(complete_canonical(self.layout.d, &self.adj_p)?);
        self.mode = Mode::NonEvasive;
        Ok(())
    }

    /// The next committed neighbour of `u` not yet revealed, counting
    /// parallel edges.
    fn committed_reply(&self, u: Vertex) -> Vertex {
        let graph = &self.committed.as_ref().expect("committed in non-evasive mode").graph;
        let (row, shown) = match u {
            Vertex::P(p) => (&graph.adj_p()[p], &self.adj_p[p]),
            Vertex::Q(q) => (&graph.adj_q()[q], &self.adj_q[q]),
        };
        let mut remaining = shown.clone();
        let next = row
            .iter()
            .copied()
            .find(|x| match remaining.iter().position(|y| y == x) {
                Some(i) => {
                    remaining.swap_remove(i);
                    false
                }
                None => true,
            })
            .expect("committed graph extends the revealed one");
        match u {
            Vertex::P(_) => Vertex::Q(next),
            Vertex::Q(_) => Vertex::P(next),
        }
    }

    /// Answers "give me a new neighbour of `u`".
    pub fn answer_query(&mut self, u: Vertex) -> Result<Answer, GameError> {
        self.check(u)?;
        let d = self.layout.d;
        if self.revealed(u)?.len() >= d {
            return Err(GameError::Saturated { vertex: u, position: self.probe_count() + 1 });
        }
        if self.mode == Mode::Evasive && self.evasive_reply(u).is_none() {
            self.commit()?;
        }
        let mode = self.mode;
        let reply = match mode {
            Mode::Evasive => self.evasive_reply(u).expect("checked above"),
            Mode::NonEvasive => self.committed_reply(u),
        };
        let answer = Answer {
            query: u,
            reply,
            mode,
            hidden: false,
        };
        let (p, q) = answer.edge();
        let hidden = self.layout.part_of_p(p) == Part::P2 && self.layout.part_of_q(q) == Part::Q1;
        let answer = Answer { hidden, ..answer };
        self.adj_p[p].push(q);
        self.adj_q[q].push(p);
        self.transcript.push(answer);
        if self.mode == Mode::Evasive && (self.free_in(Part::Q1) <= d || self.free_in(Part::P2) <= d) {
            self.commit()?;
        }
        Ok(answer)
    }

    /// Completes the revealed graph: the committed graph if the adversary has
    /// switched, otherwise a fresh completion of what has been revealed.
    pub fn complete(&self) -> Result<CanonicalGraph, GameError> {
        match &self.committed {
            Some(g) => Ok(g.clone()),
            None => Ok(complete_canonical(self.layout.d, &self.adj_p)?),
        }
    }
}

/// Signals that a prober's game has ended early.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GameOver {
    /// An M′ edge was revealed.
    HiddenRevealed,
    Error(GameError),
}

/// The prober's view of the game.
pub struct Board<'a> {
    instance: &'a mut CanonicalInstance,
}

impl Board<'_> {
    pub fn d(&self) -> usize {
        self.instance.d()
    }

    pub fn layout(&self) -> Layout {
        self.instance.layout()
    }

    pub fn revealed(&self, u: Vertex) -> &[usize] {
        self.instance.revealed(u).unwrap_or(&[])
    }

    pub fn degree_known(&self, u: Vertex) -> usize {
        self.revealed(u).len()
    }

    /// Probes for a new neighbour of `u`. Ends the game once an M′ edge
    /// is revealed.
    pub fn query(&mut self, u: Vertex) -> Result<Vertex, GameOver> {
        let answer = self.instance.answer_query(u).map_err(GameOver::Error)?;
        if answer.hidden {
            Err(GameOver::HiddenRevealed)
        } else {
            Ok(answer.reply)
        }
    }
}

/// A deterministic algorithm that learns the graph only through queries.
pub trait Prober {
    fn name(&self) -> &'static str;
    /// Plays until it gives up or the board ends the game.
    fn play(&mut self, board: &mut Board<'_>) -> Result<(), GameOver>;
}

/// Summary of one game.
#[derive(Debug, Clone)]
pub struct GameReport {
    pub prober: &'static str,
    pub d: usize,
    /// Probes up to and including the first M′ reveal, if one happened.
    pub probes_to_hidden: Option<u64>,
    pub total_probes: u64,
    pub evasive_answers: u64,
    pub transcript: Vec<Answer>,
    /// The graph every answer was consistent with.
    pub graph: CanonicalGraph,
}

impl GameReport {
    /// Replays the transcript against the final graph: every answer must be
    /// an edge, with multiplicity, of a valid member of G(d).
    pub fn is_consistent(&self) -> bool {
        if crate::canonical::validate_canonical(&self.graph.graph, self.d, &self.graph.hidden).is_err() {
            return false;
        }
        let mut remaining: Vec<Vec<usize>> = self.graph.graph.adj_p().to_vec();
        let layout = self.graph.layout;
        for p in layout.range(Part::P1).take(self.d) {
            if !take_one(&mut remaining[p], layout.s()) {
                return false;
            }
        }
        for q in layout.range(Part::Q2).take(self.d) {
            if !take_one(&mut remaining[layout.t()], q) {
                return false;
            }
        }
        self.transcript.iter().all(|a| {
            let (p, q) = a.edge();
            take_one(&mut remaining[p], q) && a.hidden == self.graph.is_hidden_edge(p, q)
        })
    }
}

fn take_one(row: &mut Vec<usize>, x: usize) -> bool {
    match row.iter().position(|&y| y == x) {
        Some(i) => {
            row.swap_remove(i);
            true
        }
        None => false,
    }
}

pub fn run_game(prober: &mut dyn Prober, d: usize) -> Result<GameReport, GameError> {
    let mut instance = CanonicalInstance::new(d);
    let outcome = prober.play(&mut Board { instance: &mut instance });
    if let Err(GameOver::Error(e)) = outcome {
        return Err(e);
    }
    let transcript = instance.transcript().to_vec();
    let probes_to_hidden = transcript.iter().position(|a| a.hidden).map(|i| i as u64 + 1);
    let evasive_answers = transcript.iter().filter(|a| a.mode == Mode::Evasive).count() as u64;
    Ok(GameReport {
        prober: prober.name(),
        d,
        probes_to_hidden,
        total_probes: instance.probe_count(),
        evasive_answers,
        graph: instance.complete()?,
        transcript,
    })
}

/// Queries every P-side vertex until its row is full, in index order, then
/// every Q-side vertex.
#[derive(Debug, Default)]
pub struct ScanProber;

impl Prober for ScanProber {
    fn name(&self) -> &'static str {
        "scan"
    }

    fn play(&mut self, board: &mut Board<'_>) -> Result<(), GameOver> {
        let n = board.layout().side_len();
        let d = board.d();
        for u in (0..n).map(Vertex::P).chain((0..n).map(Vertex::Q)) {
            while board.degree_known(u) < d {
                board.query(u)?;
            }
        }
        Ok(())
    }
}

/// Builds a perfect matching between P ∪ {t} and Q ∪ {s} by depth-first
/// augmenting-path search, querying for new neighbours only when the known
/// ones are exhausted.
#[derive(Debug, Default)]
pub struct GreedyAugmentProber {
    mate_p: Vec<Option<usize>>,
    mate_q: Vec<Option<usize>>,
    visited: Vec<bool>,
}

impl GreedyAugmentProber {
    fn augment(&mut self, board: &mut Board<'_>, p: usize) -> Result<bool, GameOver> {
        self.visited[p] = true;
        let d = board.d();
        let mut i = 0;
        loop {
            let q = if i < board.degree_known(Vertex::P(p)) {
                board.revealed(Vertex::P(p))[i]
            } else if i < d {
                match board.query(Vertex::P(p))? {
                    Vertex::Q(q) => q,
                    Vertex::P(_) => unreachable!("P queries return Q vertices"),
                }
            } else {
                return Ok(false);
            };
            i += 1;
            let next = match self.mate_q[q] {
                None => None,
                Some(w) if self.visited[w] => continue,
                Some(w) => Some(w),
            };
            if next.is_none() || self.augment(board, next.unwrap())? {
                self.mate_p[p] = Some(q);
                self.mate_q[q] = Some(p);
                return Ok(true);
            }
        }
    }
}

impl Prober for GreedyAugmentProber {
    fn name(&self) -> &'static str {
        "greedy"
    }

    fn play(&mut self, board: &mut Board<'_>) -> Result<(), GameOver> {
        let n = board.layout().side_len();
        self.mate_p = vec![None; n];
        self.mate_q = vec![None; n];
        let mut order: Vec<usize> = vec![board.layout().t()];
        order.extend(0..n - 1);
        for p in order {
            self.visited = vec![false; n];
            self.augment(board, p)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evasive_answers_stay_in_side_pairs() {
        let mut inst = CanonicalInstance::new(3);
        let a = inst.answer_query(Vertex::P(0)).unwrap();
        assert_eq!(a.reply, Vertex::Q(0));
        assert_eq!(a.mode, Mode::Evasive);
        let a = inst.answer_query(Vertex::Q(7)).unwrap();
        assert_eq!(a.reply, Vertex::P(6));
        assert!(!a.hidden);
    }

    #[test]
    fn saturated_and_unknown_queries_fail() {
        let mut inst = CanonicalInstance::new(2);
        let t = Vertex::P(inst.layout().t());
        assert_eq!(inst.answer_query(t), Err(GameError::Saturated { vertex: t, position: 1 }));
        assert_eq!(inst.answer_query(Vertex::Q(99)), Err(GameError::UnknownVertex(Vertex::Q(99))));
    }

    #[test]
    fn every_evasive_state_is_completable() {
        for d in 1..=5 {
            let mut inst = CanonicalInstance::new(d);
            let mut u = 0usize;
            while inst.mode() == Mode::Evasive {
                let v = Vertex::P(u % (4 * d));
                if inst.revealed(v).unwrap().len() < d {
                    inst.answer_query(v).unwrap();
                    assert!(inst.complete().is_ok(), "d={d} after {} probes", inst.probe_count());
                }
                u += 1;
            }
        }
    }

    #[test]
    fn both_probers_need_d_squared_probes() {
        for d in 1..=8 {
            for prober in [&mut ScanProber as &mut dyn Prober, &mut GreedyAugmentProber::default()] {
                let report = run_game(prober, d).unwrap();
                let probes = report.probes_to_hidden.expect("M′ edge revealed");
                assert!(probes >= (d * d) as u64, "{} d={d} probes={probes}", report.prober);
                assert!(report.is_consistent(), "{} d={d}", report.prober);
            }
        }
    }
}
