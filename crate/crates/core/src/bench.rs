//! Benchmark records, grids and bound checks shared by the CLI and tests.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use crate::adversary::{run_game, GreedyAugmentProber, Prober, ScanProber};
use crate::baselines::{euler_matching, hopcroft_karp_with_stats};
use crate::generate::gen_union_permutations;
use crate::graph::{verify_matching, BipartiteRegularGraph, Matching};
use crate::rng::{trial_stream, DEFAULT_RNG_NAME};
use crate::walk::{find_perfect_matching, harmonic, WalkMode};

pub const CSV_HEADER: &str = "algo,n,d,seed,wall_time_ns,total_steps,total_restarts,augmentations,m";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algo {
    Walk,
    WalkUntruncated,
    Hk,
    Euler,
    GameScan,
    GameGreedy,
}

impl Algo {
    pub const ALL: [Algo; 6] = [Algo::Walk, Algo::WalkUntruncated, Algo::Hk, Algo::Euler, Algo::GameScan, Algo::GameGreedy];

    pub fn as_str(&self) -> &'static str {
        match self {
            Algo::Walk => "walk",
            Algo::WalkUntruncated => "walk-untruncated",
            Algo::Hk => "hk",
            Algo::Euler => "euler",
            Algo::GameScan => "game-scan",
            Algo::GameGreedy => "game-greedy",
        }
    }

    pub fn is_game(&self) -> bool {
        matches!(self, Algo::GameScan | Algo::GameGreedy)
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algo {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algo::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| BenchError::Parse(format!("unknown algorithm {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BenchError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{algo} n={n} d={d} seed={seed}: {message}")]
    Run { algo: Algo, n: usize, d: usize, seed: u64, message: String },
    #[error("{algo} n={n} d={d} seed={seed}: output failed verification: {message}")]
    Verification { algo: Algo, n: usize, d: usize, seed: u64, message: String },
}

/// One benchmark run.
///
/// For walks `total_steps` counts out-edge samples; for Hopcroft–Karp it
/// counts adjacency scans and `total_restarts` counts phases; for Euler
/// halving it counts edges traversed. Game rows use `n = 4d + 1` and report
/// the probes made up to the first hidden-edge reveal as `total_steps` and
/// the evasive answers as `augmentations`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchRecord {
    pub algo: Algo,
    pub n: usize,
    pub d: usize,
    pub seed: u64,
    pub wall_time_ns: u64,
    pub total_steps: u64,
    pub total_restarts: u64,
    pub augmentations: u64,
    pub m: u64,
}

impl BenchRecord {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.algo, self.n, self.d, self.seed, self.wall_time_ns, self.total_steps, self.total_restarts, self.augmentations, self.m
        )
    }

    pub fn parse_csv(line: &str) -> Result<Self, BenchError> {
        let f: Vec<&str> = line.trim().split(',').collect();
        if f.len() != 9 {
            return Err(BenchError::Parse(format!("expected 9 fields, found {}", f.len())));
        }
        let num = |i: usize| f[i].parse::<u64>().map_err(|_| BenchError::Parse(format!("bad number {:?}", f[i])));
        Ok(Self {
            algo: f[0].parse()?,
            n: num(1)? as usize,
            d: num(2)? as usize,
            seed: num(3)?,
            wall_time_ns: num(4)?,
            total_steps: num(5)?,
            total_restarts: num(6)?,
            augmentations: num(7)?,
            m: num(8)?,
        })
    }
}

/// Comment line recording the crate version and generator identity.
pub fn metadata_line() -> String {
    format!("# regmatch {} rng={}", env!("CARGO_PKG_VERSION"), DEFAULT_RNG_NAME)
}

/// Parses a size list: `N`, `2^k`, `a,b,c`, `a..b` (inclusive) or
/// `2^a..2^b` (powers of two).
pub fn parse_sizes(text: &str) -> Result<Vec<usize>, BenchError> {
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim) {
        if let Some((lo, hi)) = part.split_once("..") {
            match (pow2_exponent(lo), pow2_exponent(hi)) {
                (Some(a), Some(b)) => out.extend((a..=b).map(|k| 1usize << k)),
                _ => out.extend(parse_size(lo)?..=parse_size(hi)?),
            }
        } else {
            out.push(parse_size(part)?);
        }
    }
    if out.is_empty() {
        return Err(BenchError::Parse(format!("empty size list {text:?}")));
    }
    Ok(out)
}

fn pow2_exponent(tok: &str) -> Option<u32> {
    tok.trim().strip_prefix("2^").and_then(|k| k.parse::<u32>().ok()).filter(|&k| k < usize::BITS)
}

fn parse_size(tok: &str) -> Result<usize, BenchError> {
    match pow2_exponent(tok) {
        Some(k) => Ok(1usize << k),
        None => tok.trim().parse().map_err(|_| BenchError::Parse(format!("bad size {tok:?}"))),
    }
}

/// A degree in a grid: fixed, or `ceil(sqrt(n))` of the cell's size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DegreeSpec {
    Fixed(usize),
    Sqrt,
}

impl DegreeSpec {
    pub fn resolve(self, n: usize) -> usize {
        match self {
            DegreeSpec::Fixed(d) => d,
            DegreeSpec::Sqrt => ceil_sqrt(n),
        }
    }
}

pub fn ceil_sqrt(n: usize) -> usize {
    let mut r = (n as f64).sqrt() as usize;
    while r * r < n {
        r += 1;
    }
    while r > 0 && (r - 1) * (r - 1) >= n {
        r -= 1;
    }
    r
}

/// Parses a degree list; entries as in [`parse_sizes`] plus `sqrt`.
pub fn parse_degrees(text: &str) -> Result<Vec<DegreeSpec>, BenchError> {
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim) {
        if part == "sqrt" {
            out.push(DegreeSpec::Sqrt);
        } else {
            out.extend(parse_sizes(part)?.into_iter().map(DegreeSpec::Fixed));
        }
    }
    Ok(out)
}

/// One cell of a grid: a graph size, degree and trial seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cell {
    pub algo: Algo,
    pub n: usize,
    pub d: usize,
    pub seed: u64,
}

/// Expands a grid in deterministic order. Game algorithms ignore `sizes`
/// and run once per degree, since the adversary is deterministic.
pub fn expand_grid(algos: &[Algo], sizes: &[usize], degrees: &[DegreeSpec], seeds: u64, base_seed: u64) -> Vec<Cell> {
    let mut cells = Vec::new();
    for &algo in algos {
        if algo.is_game() {
            for deg in degrees {
                let d = deg.resolve(0);
                cells.push(Cell { algo, n: 4 * d + 1, d, seed: base_seed });
            }
            continue;
        }
        for &n in sizes {
            for deg in degrees {
                let d = deg.resolve(n);
                for s in 0..seeds {
                    cells.push(Cell { algo, n, d, seed: base_seed + s });
                }
            }
        }
    }
    cells
}

/// Runs one cell: generates the graph from the cell's seed, runs the
/// algorithm, and verifies the output before returning a record.
pub fn run_cell(cell: Cell) -> Result<BenchRecord, BenchError> {
    let Cell { algo, n, d, seed } = cell;
    let run_err = |message: String| BenchError::Run { algo, n, d, seed, message };
    let verify_err = |message: String| BenchError::Verification { algo, n, d, seed, message };

    if algo.is_game() {
        if d == 0 {
            return Err(run_err("game needs a fixed degree of at least 1".into()));
        }
        let mut prober: Box<dyn Prober> = match algo {
            Algo::GameScan => Box::new(ScanProber),
            _ => Box::new(GreedyAugmentProber::default()),
        };
        let start = Instant::now();
        let report = run_game(prober.as_mut(), d).map_err(|e| run_err(e.to_string()))?;
        let wall = start.elapsed().as_nanos() as u64;
        if !report.is_consistent() {
            return Err(verify_err("transcript inconsistent with the committed graph".into()));
        }
        return Ok(BenchRecord {
            algo,
            n,
            d,
            seed,
            wall_time_ns: wall,
            total_steps: report.probes_to_hidden.unwrap_or(report.total_probes),
            total_restarts: 0,
            augmentations: report.evasive_answers,
            m: (n * d) as u64,
        });
    }

    let graph = gen_union_permutations(n, d, seed, false).map_err(|e| run_err(e.to_string()))?;
    Ok(match_graph(algo, &graph, seed)?.1)
}

/// Runs a matching algorithm on `graph` and verifies that the result is
/// perfect. Walk randomness comes from the stream of `(seed, n, d)`.
pub fn match_graph(algo: Algo, graph: &BipartiteRegularGraph, seed: u64) -> Result<(Matching, BenchRecord), BenchError> {
    let (n, d) = (graph.n(), graph.d());
    let run_err = |message: String| BenchError::Run { algo, n, d, seed, message };
    let start = Instant::now();
    let (matching, steps, restarts, augmentations) = match algo {
        Algo::Walk | Algo::WalkUntruncated => {
            let mode = if algo == Algo::Walk { WalkMode::Truncated } else { WalkMode::Untruncated };
            let mut rng = trial_stream(seed, n, d, 0);
            let (m, stats) = find_perfect_matching(graph, &mut rng, mode).map_err(|e| run_err(e.to_string()))?;
            (m, stats.total_steps, stats.total_restarts, stats.augmentations() as u64)
        }
        Algo::Hk => {
            let (m, stats) = hopcroft_karp_with_stats(graph.adj_p(), n);
            (m, stats.edge_scans, stats.phases, stats.augmentations)
        }
        Algo::Euler => {
            let (m, work) = euler_matching(graph).map_err(|e| run_err(e.to_string()))?;
            (m, work, 0, 0)
        }
        Algo::GameScan | Algo::GameGreedy => return Err(run_err("not a matching algorithm".into())),
    };
    let wall = start.elapsed().as_nanos() as u64;
    verify_matching(graph, &matching, true)
        .map_err(|e| BenchError::Verification { algo, n, d, seed, message: e.to_string() })?;
    let record = BenchRecord {
        algo,
        n,
        d,
        seed,
        wall_time_ns: wall,
        total_steps: steps,
        total_restarts: restarts,
        augmentations,
        m: graph.m() as u64,
    };
    Ok((matching, record))
}

pub fn truncated_bound(n: usize) -> f64 {
    8.0 * n as f64 + 4.0 * n as f64 * harmonic(n)
}

pub fn untruncated_bound(n: usize) -> f64 {
    1.5 * (n as f64 + n as f64 * harmonic(n))
}

/// Outcome of one bound comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheck {
    pub algo: Algo,
    pub n: usize,
    pub d: usize,
    /// Mean total steps per cell, or the probe count of a game row.
    pub observed: f64,
    pub bound: f64,
    pub pass: bool,
}

impl fmt::Display for BoundCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} n={} d={} observed={:.1} bound={:.1}",
            if self.pass { "PASS" } else { "FAIL" },
            self.algo,
            self.n,
            self.d,
            self.observed,
            self.bound
        )
    }
}

/// Compares mean total steps per `(algo, n, d)` against the step bounds for
/// walks, and every game row against `d^2` probes. Other algorithms are not
/// checked.
pub fn check_bounds(records: &[BenchRecord]) -> Vec<BoundCheck> {
    let mut cells: Vec<(Algo, usize, usize)> = records.iter().map(|r| (r.algo, r.n, r.d)).collect();
    cells.sort_unstable();
    cells.dedup();
    let mut out = Vec::new();
    for (algo, n, d) in cells {
        let rows: Vec<&BenchRecord> = records.iter().filter(|r| (r.algo, r.n, r.d) == (algo, n, d)).collect();
        let mean = rows.iter().map(|r| r.total_steps as f64).sum::<f64>() / rows.len() as f64;
        let bound = match algo {
            Algo::Walk => truncated_bound(n),
            Algo::WalkUntruncated => untruncated_bound(n),
            Algo::GameScan | Algo::GameGreedy => {
                let need = (d * d) as f64;
                let worst = rows.iter().map(|r| r.total_steps as f64).fold(f64::INFINITY, f64::min);
                out.push(BoundCheck { algo, n, d, observed: worst, bound: need, pass: worst >= need });
                continue;
            }
            Algo::Hk | Algo::Euler => continue,
        };
        out.push(BoundCheck { algo, n, d, observed: mean, bound, pass: mean <= bound });
    }
    out
}
