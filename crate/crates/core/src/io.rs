//! Plain-text file formats.
//!
//! Graph: `n d`, then n rows of adjP with d indices each, optionally followed
//! by n rows of adjQ (derived when absent).
//! Matching: one line `p q` per P vertex, with `q = -1` when unmatched.
//! Matrix: `n m mode`, then m lines `row col weight`; mode is `float` or
//! `integer`.
//! Decomposition: one line `lambda p(0) ... p(n-1)` per term.
//!
//! Blank lines and lines starting with `#` are ignored. Parse errors carry the
//! 1-based line number.

use std::fmt::Display;
use std::io::{BufRead, Write};
use std::str::FromStr;

use crate::bvn::{BvnDecomposition, BvnTerm, MatrixMode};
use crate::graph::{BipartiteRegularGraph, Matching, Violation};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid graph: {0}")]
    Graph(#[from] Violation),
}

fn parse_err(line: usize, message: impl Into<String>) -> IoError {
    IoError::Parse { line, message: message.into() }
}

/// Non-empty, non-comment lines paired with their 1-based line numbers.
fn content_lines<R: BufRead>(reader: R) -> Result<Vec<(usize, String)>, IoError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        out.push((i + 1, trimmed.to_string()));
    }
    Ok(out)
}

fn fields<T: FromStr>(line: usize, text: &str) -> Result<Vec<T>, IoError> {
    text.split_whitespace()
        .map(|tok| tok.parse::<T>().map_err(|_| parse_err(line, format!("cannot parse {tok:?}"))))
        .collect()
}

fn header<const K: usize>(lines: &[(usize, String)], what: &str) -> Result<[String; K], IoError> {
    let (line, text) = lines.first().ok_or_else(|| parse_err(1, format!("missing {what} header")))?;
    let toks: Vec<String> = text.split_whitespace().map(str::to_string).collect();
    toks.try_into().map_err(|_| parse_err(*line, format!("{what} header needs {K} fields")))
}

fn parse_usize(line: usize, tok: &str) -> Result<usize, IoError> {
    tok.parse().map_err(|_| parse_err(line, format!("cannot parse {tok:?}")))
}

fn index_rows(lines: &[(usize, String)], n: usize, d: usize) -> Result<Vec<Vec<usize>>, IoError> {
    lines
        .iter()
        .map(|(line, text)| {
            let row: Vec<usize> = fields(*line, text)?;
            if row.len() != d {
                return Err(parse_err(*line, format!("expected {d} entries, found {}", row.len())));
            }
            if let Some(&x) = row.iter().find(|&&x| x >= n) {
                return Err(parse_err(*line, format!("index {x} out of range for n={n}")));
            }
            Ok(row)
        })
        .collect()
}

pub fn read_graph<R: BufRead>(reader: R) -> Result<BipartiteRegularGraph, IoError> {
    let lines = content_lines(reader)?;
    let [n, d] = header::<2>(&lines, "graph")?;
    let n = parse_usize(lines[0].0, &n)?;
    let d = parse_usize(lines[0].0, &d)?;
    let body = &lines[1..];
    if body.len() != n && body.len() != 2 * n {
        let line = body.last().map_or(lines[0].0, |l| l.0);
        return Err(parse_err(line, format!("expected {n} or {} rows, found {}", 2 * n, body.len())));
    }
    let adj_p = index_rows(&body[..n], n, d)?;
    let multigraph = adj_p.iter().any(|row| has_repeat(row));
    if body.len() == 2 * n {
        let adj_q = index_rows(&body[n..], n, d)?;
        Ok(BipartiteRegularGraph::from_parts(d, adj_p, adj_q, multigraph)?)
    } else {
        Ok(BipartiteRegularGraph::from_adj_p(d, adj_p, multigraph)?)
    }
}

fn has_repeat(row: &[usize]) -> bool {
    let mut r = row.to_vec();
    r.sort_unstable();
    r.windows(2).any(|w| w[0] == w[1])
}

pub fn write_graph<W: Write>(graph: &BipartiteRegularGraph, mut out: W, with_adj_q: bool) -> std::io::Result<()> {
    writeln!(out, "{} {}", graph.n(), graph.d())?;
    let mut rows: Vec<&Vec<usize>> = graph.adj_p().iter().collect();
    if with_adj_q {
        rows.extend(graph.adj_q());
    }
    for row in rows {
        write_joined(&mut out, row.iter())?;
    }
    Ok(())
}

fn write_joined<W: Write, T: Display>(out: &mut W, items: impl Iterator<Item = T>) -> std::io::Result<()> {
    let mut first = true;
    for x in items {
        if !first {
            write!(out, " ")?;
        }
        write!(out, "{x}")?;
        first = false;
    }
    writeln!(out)
}

/// Reads a matching over `n_q` Q vertices. Consistency against a graph is
/// left to the verifier.
pub fn read_matching<R: BufRead>(reader: R, n_q: usize) -> Result<Matching, IoError> {
    let lines = content_lines(reader)?;
    let mut mates = Vec::with_capacity(lines.len());
    for (expected_p, (line, text)) in lines.iter().enumerate() {
        let vals: Vec<i64> = fields(*line, text)?;
        let [p, q] = vals[..] else {
            return Err(parse_err(*line, "expected two fields"));
        };
        if p != expected_p as i64 {
            return Err(parse_err(*line, format!("expected row for p={expected_p}, found {p}")));
        }
        mates.push(match q {
            -1 => None,
            q if q >= 0 && (q as usize) < n_q => Some(q as usize),
            q => return Err(parse_err(*line, format!("q={q} out of range"))),
        });
    }
    let mut matching = Matching::with_sides(mates.len(), n_q);
    for (p, q) in mates.iter().enumerate() {
        if let Some(q) = *q {
            matching.set_pair(p, q);
            matching.bump_size();
        }
    }
    Ok(matching)
}

pub fn write_matching<W: Write>(matching: &Matching, mut out: W) -> std::io::Result<()> {
    for (p, q) in matching.mates_p().iter().enumerate() {
        match q {
            Some(q) => writeln!(out, "{p} {q}")?,
            None => writeln!(out, "{p} -1")?,
        }
    }
    Ok(())
}

/// Matrix triplets tagged with their arithmetic.
#[derive(Debug, Clone, PartialEq)]
pub enum MatrixFile {
    Float { n: usize, entries: Vec<(usize, usize, f64)> },
    Integer { n: usize, entries: Vec<(usize, usize, u64)> },
}

impl MatrixFile {
    pub fn n(&self) -> usize {
        match self {
            MatrixFile::Float { n, .. } | MatrixFile::Integer { n, .. } => *n,
        }
    }

    pub fn mode(&self) -> MatrixMode {
        match self {
            MatrixFile::Float { .. } => MatrixMode::Float,
            MatrixFile::Integer { .. } => MatrixMode::Integer,
        }
    }
}

fn triplets<W: FromStr>(body: &[(usize, String)], n: usize) -> Result<Vec<(usize, usize, W)>, IoError> {
    body.iter()
        .map(|(line, text)| {
            let toks: Vec<&str> = text.split_whitespace().collect();
            let [r, c, w] = toks[..] else {
                return Err(parse_err(*line, "expected `row col weight`"));
            };
            let (r, c) = (parse_usize(*line, r)?, parse_usize(*line, c)?);
            if r >= n || c >= n {
                return Err(parse_err(*line, format!("entry ({r}, {c}) out of range for n={n}")));
            }
            let w = w.parse::<W>().map_err(|_| parse_err(*line, format!("cannot parse weight {w:?}")))?;
            Ok((r, c, w))
        })
        .collect()
}

pub fn read_matrix<R: BufRead>(reader: R) -> Result<MatrixFile, IoError> {
    let lines = content_lines(reader)?;
    let [n, m, mode] = header::<3>(&lines, "matrix")?;
    let hline = lines[0].0;
    let n = parse_usize(hline, &n)?;
    let m = parse_usize(hline, &m)?;
    let mode: MatrixMode = mode.parse().map_err(|_| parse_err(hline, format!("unknown mode {mode:?}")))?;
    let body = &lines[1..];
    if body.len() != m {
        return Err(parse_err(hline, format!("header says {m} entries, found {}", body.len())));
    }
    Ok(match mode {
        MatrixMode::Float => {
            let entries = triplets::<f64>(body, n)?;
            if let Some((i, _)) = entries.iter().enumerate().find(|(_, e)| !(e.2.is_finite())) {
                return Err(parse_err(body[i].0, "weight is not finite"));
            }
            MatrixFile::Float { n, entries }
        }
        MatrixMode::Integer => MatrixFile::Integer { n, entries: triplets::<u64>(body, n)? },
    })
}

pub fn write_matrix<W: Write, T: Display>(
    n: usize,
    mode: MatrixMode,
    entries: &[(usize, usize, T)],
    mut out: W,
) -> std::io::Result<()> {
    writeln!(out, "{n} {} {}", entries.len(), mode.as_str())?;
    for (r, c, w) in entries {
        writeln!(out, "{r} {c} {w}")?;
    }
    Ok(())
}

pub fn write_decomposition<W: Write, T: Display>(decomposition: &BvnDecomposition<T>, mut out: W) -> std::io::Result<()> {
    for term in &decomposition.terms {
        write!(out, "{}", term.lambda)?;
        for p in &term.permutation {
            write!(out, " {p}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Reads decomposition terms over permutations of size `n`.
pub fn read_decomposition<R: BufRead, T: FromStr>(reader: R, n: usize) -> Result<Vec<BvnTerm<T>>, IoError> {
    content_lines(reader)?
        .into_iter()
        .map(|(line, text)| {
            let mut toks = text.split_whitespace();
            let lambda = toks
                .next()
                .and_then(|t| t.parse::<T>().ok())
                .ok_or_else(|| parse_err(line, "missing or bad lambda"))?;
            let permutation: Vec<usize> = toks.map(|t| parse_usize(line, t)).collect::<Result<_, _>>()?;
            let mut seen = vec![false; n];
            if permutation.len() != n || permutation.iter().any(|&c| c >= n || std::mem::replace(&mut seen[c], true)) {
                return Err(parse_err(line, format!("not a permutation of 0..{n}")));
            }
            Ok(BvnTerm { lambda, permutation })
        })
        .collect()
}
