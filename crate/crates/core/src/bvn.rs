//! Perfect matchings in the support of a doubly stochastic matrix, and the
//! Birkhoff–von Neumann decomposition built from them.
//!
//! Each row keeps its entries in arrival order under a [`PrefixWeightIndex`],
//! so the random walk of [`crate::walk`] runs unchanged with weighted row
//! sampling: a free row samples proportionally to weight, a supernode samples
//! its mate's row with the matched entry cut out of the distribution.
//! Extracting a matching subtracts its smallest entry from every matched
//! entry and deletes whatever reaches zero.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::graph::Matching;
use crate::rng::{seeded, Purpose};
use crate::sampler::{PrefixWeightIndex, SamplerError, Weight};
use crate::walk::{step_cap, RowSampler, WalkError, WalkMatcher, WalkMode};

/// How matrix weights are stored.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixMode {
    Float,
    Integer,
}

impl MatrixMode {
    pub fn as_str(self) -> &'static str {
        match self {
            MatrixMode::Float => "float",
            MatrixMode::Integer => "integer",
        }
    }
}

impl std::str::FromStr for MatrixMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "float" => Ok(MatrixMode::Float),
            "integer" | "int" => Ok(MatrixMode::Integer),
            other => Err(format!("unknown matrix mode {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Line {
    Row,
    Column,
}

impl std::fmt::Display for Line {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Line::Row => "row",
            Line::Column => "column",
        })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BvnError {
    #[error("matrix dimension must be at least 1")]
    EmptyDimension,
    #[error("entry ({row}, {col}) out of range for n={n}")]
    OutOfRange { row: usize, col: usize, n: usize },
    #[error("entry ({row}, {col}) must have positive finite weight")]
    NonPositive { row: usize, col: usize },
    #[error("duplicate entry ({row}, {col})")]
    Duplicate { row: usize, col: usize },
    #[error("not doubly stochastic: {line} {index} sums to {sum} but the common line sum is {expected} (deviation {deviation:e})")]
    NotDoublyStochastic { line: Line, index: usize, sum: f64, expected: f64, deviation: f64 },
    #[error("matrix has no mass left")]
    Exhausted,
    #[error("weights overflow")]
    Overflow,
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error("support matching failed: {0}")]
    Walk(#[from] WalkError),
}

#[derive(Debug, Clone)]
struct SupportRow<W: Weight> {
    cols: Vec<usize>,
    index: PrefixWeightIndex<W>,
}

/// Doubly stochastic (or, in integer mode, D-regular multigraph) matrix with
/// per-row weighted samplers over the arrival order of its entries.
#[derive(Debug, Clone)]
pub struct StochasticSupportMatrix<W: Weight> {
    n: usize,
    rows: Vec<SupportRow<W>>,
    colsum: Vec<W>,
    mass: W,
    live: usize,
}

/// Tolerance for row/column sums in float mode: `1e-9 * n`, scaled by the
/// common line sum when that exceeds one.
fn line_tolerance(n: usize, line_sum: f64) -> f64 {
    1e-9 * n as f64 * line_sum.max(1.0)
}

impl<W: Weight> StochasticSupportMatrix<W> {
    /// Builds per-row samplers from `(row, col, weight)` triplets in linear
    /// time and checks that all line sums agree.
    pub fn load(n: usize, triplets: &[(usize, usize, W)]) -> Result<Self, BvnError> {
        if n == 0 {
            return Err(BvnError::EmptyDimension);
        }
        let mut row_cols: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut row_weights: Vec<Vec<W>> = vec![Vec::new(); n];
        for &(row, col, w) in triplets {
            if row >= n || col >= n {
                return Err(BvnError::OutOfRange { row, col, n });
            }
            if !w.is_valid() || !w.is_positive() {
                return Err(BvnError::NonPositive { row, col });
            }
            row_cols[row].push(col);
            row_weights[row].push(w);
        }
        // Duplicate check with a per-column stamp, O(m).
        let mut stamp = vec![usize::MAX; n];
        for (row, cols) in row_cols.iter().enumerate() {
            for &col in cols {
                if stamp[col] == row {
                    return Err(BvnError::Duplicate { row, col });
                }
                stamp[col] = row;
            }
        }
        let mut colsum = vec![W::ZERO; n];
        for (cols, weights) in row_cols.iter().zip(&row_weights) {
            for (&c, &w) in cols.iter().zip(weights) {
                colsum[c] = colsum[c].checked_add(w).ok_or(BvnError::Overflow)?;
            }
        }
        let rows = row_cols
            .into_iter()
            .zip(row_weights)
            .map(|(cols, weights)| Ok(SupportRow { cols, index: PrefixWeightIndex::build(weights)? }))
            .collect::<Result<Vec<_>, BvnError>>()?;
        let row_totals: Vec<W> = rows.iter().map(|r| r.index.total()).collect();
        let mass = W::sum(&row_totals).ok_or(BvnError::Overflow)?;
        let matrix = Self { n, rows, colsum, mass, live: triplets.len() };
        matrix.check_balanced()?;
        Ok(matrix)
    }

    /// Checks that every row and column sums to `mass / n`.
    pub fn check_balanced(&self) -> Result<(), BvnError> {
        let n = self.n;
        let expected = self.mass.to_f64() / n as f64;
        let tol = if W::EXACT { 0.0 } else { line_tolerance(n, expected) };
        let lines = self
            .rows
            .iter()
            .map(|r| (Line::Row, r.index.total()))
            .chain(self.colsum.iter().map(|&c| (Line::Column, c)));
        for (i, (line, sum)) in lines.enumerate() {
            let index = if i < n { i } else { i - n };
            let sum = sum.to_f64();
            let deviation = (sum - expected).abs();
            if deviation > tol {
                return Err(BvnError::NotDoublyStochastic { line, index, sum, expected, deviation });
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mode(&self) -> MatrixMode {
        if W::EXACT {
            MatrixMode::Integer
        } else {
            MatrixMode::Float
        }
    }

    /// Total remaining weight.
    pub fn mass(&self) -> W {
        self.mass
    }

    /// Common row/column sum, `mass / n`.
    pub fn line_sum(&self) -> f64 {
        self.mass.to_f64() / self.n as f64
    }

    /// Number of entries with positive weight.
    pub fn live_entries(&self) -> usize {
        self.live
    }

    pub fn row_sum(&self, row: usize) -> W {
        self.rows[row].index.total()
    }

    pub fn col_sum(&self, col: usize) -> W {
        self.colsum[col]
    }

    pub fn weight_at(&self, row: usize, slot: usize) -> W {
        self.rows[row].index.weight(slot)
    }

    /// Live entries as `(row, col, weight)` in row-major arrival order.
    pub fn entries(&self) -> Vec<(usize, usize, W)> {
        let mut out = Vec::with_capacity(self.live);
        for (r, row) in self.rows.iter().enumerate() {
            for (slot, &c) in row.cols.iter().enumerate() {
                let w = row.index.weight(slot);
                if w.is_positive() {
                    out.push((r, c, w));
                }
            }
        }
        out
    }

    /// Entry weight at `(row, col)`, zero if absent.
    pub fn get(&self, row: usize, col: usize) -> W {
        let r = &self.rows[row];
        r.cols
            .iter()
            .position(|&c| c == col)
            .map(|slot| r.index.weight(slot))
            .unwrap_or(W::ZERO)
    }

    fn is_exhausted(&self) -> bool {
        self.live == 0 || !self.mass.is_positive()
    }
}

impl<W: Weight> RowSampler for StochasticSupportMatrix<W> {
    fn side_len(&self) -> usize {
        self.n
    }

    #[inline]
    fn sample_row<R: Rng + ?Sized>(&self, p: usize, rng: &mut R) -> Option<(usize, usize)> {
        let row = &self.rows[p];
        let slot = row.index.sample(rng).ok()?;
        Some((slot, row.cols[slot]))
    }

    #[inline]
    fn sample_row_excluding<R: Rng + ?Sized>(
        &self,
        p: usize,
        excluded: usize,
        rng: &mut R,
    ) -> Option<(usize, usize)> {
        let row = &self.rows[p];
        let slot = row.index.sample_excluding(excluded, rng).ok()?;
        Some((slot, row.cols[slot]))
    }

    fn column_at(&self, p: usize, slot: usize) -> Option<usize> {
        let row = self.rows.get(p)?;
        let col = *row.cols.get(slot)?;
        row.index.weight(slot).is_positive().then_some(col)
    }

    fn find_slot(&self, p: usize, q: usize) -> Option<usize> {
        let row = &self.rows[p];
        row.cols
            .iter()
            .enumerate()
            .position(|(slot, &c)| c == q && row.index.weight(slot).is_positive())
    }

    fn support_rows(&self) -> Vec<Vec<usize>> {
        self.rows
            .iter()
            .map(|row| {
                row.cols
                    .iter()
                    .enumerate()
                    .filter(|&(slot, _)| row.index.weight(slot).is_positive())
                    .map(|(_, &c)| c)
                    .collect()
            })
            .collect()
    }
}

/// A perfect matching in the support together with the row slot of every
/// matched entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportMatching {
    pub matching: Matching,
    pub slots: Vec<usize>,
}

impl SupportMatching {
    /// Column matched to each row.
    pub fn permutation(&self) -> Vec<usize> {
        self.matching.mates_p().iter().map(|q| q.expect("perfect matching")).collect()
    }
}

/// Finds a perfect matching inside the support by truncated weighted walks.
pub fn find_support_matching<W: Weight, R: Rng + ?Sized>(
    matrix: &StochasticSupportMatrix<W>,
    rng: &mut R,
) -> Result<SupportMatching, BvnError> {
    if matrix.is_exhausted() {
        return Err(BvnError::Exhausted);
    }
    let n = matrix.n;
    let mut state = WalkMatcher::new(matrix);
    state.grow_to(n, WalkMode::Truncated, Some(step_cap(n)), rng)?;
    let slots = (0..n).map(|p| state.matched_slot(p).expect("perfect matching")).collect();
    Ok(SupportMatching { matching: state.into_matching(), slots })
}

/// One Birkhoff–von Neumann term: `lambda` times the permutation matrix
/// sending row `i` to column `permutation[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BvnTerm<W> {
    pub lambda: W,
    pub permutation: Vec<usize>,
}

/// Finds a support matching, subtracts its smallest entry from every matched
/// entry, and deletes entries that reach zero (or the float threshold).
pub fn extract_matching<W: Weight, R: Rng + ?Sized>(
    matrix: &mut StochasticSupportMatrix<W>,
    rng: &mut R,
) -> Result<BvnTerm<W>, BvnError> {
    let found = find_support_matching(matrix, rng)?;
    let permutation = found.permutation();
    let lambda = found
        .slots
        .iter()
        .enumerate()
        .map(|(p, &slot)| matrix.rows[p].index.weight(slot))
        .fold(None, |acc: Option<W>, w| match acc {
            Some(a) if a <= w => Some(a),
            _ => Some(w),
        })
        .expect("n >= 1");
    let threshold = W::zero_threshold();
    for (p, &slot) in found.slots.iter().enumerate() {
        let q = permutation[p];
        let row = &mut matrix.rows[p];
        let old = row.index.weight(slot);
        let mut new = old.minus(lambda);
        if new <= threshold {
            new = W::ZERO;
            matrix.live -= 1;
        }
        row.index.update(slot, new)?;
        let removed = old.minus(new);
        matrix.colsum[q] = matrix.colsum[q].minus(removed);
        if !W::EXACT && matrix.colsum[q] < W::ZERO {
            matrix.colsum[q] = W::ZERO;
        }
    }
    let row_totals: Vec<W> = matrix.rows.iter().map(|r| r.index.total()).collect();
    matrix.mass = W::sum(&row_totals).ok_or(BvnError::Overflow)?;
    Ok(BvnTerm { lambda, permutation })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BvnDecomposition<W> {
    pub terms: Vec<BvnTerm<W>>,
    /// Remaining mass as a fraction of the starting mass.
    pub residual: f64,
}

impl<W: Weight> BvnDecomposition<W> {
    pub fn lambda_sum(&self) -> W {
        self.terms
            .iter()
            .try_fold(W::ZERO, |acc, t| acc.checked_add(t.lambda))
            .expect("lambda sum bounded by line sum")
    }
}

/// Greedy decomposition: up to `max_terms` successive extractions (all of
/// them when `None`), stopping once the matrix is empty. In float mode the
/// loop also stops when the line sum has fallen below `1e-10` of its start,
/// leaving that remainder as residual.
pub fn decompose<W: Weight, R: Rng + ?Sized>(
    matrix: &mut StochasticSupportMatrix<W>,
    max_terms: Option<usize>,
    rng: &mut R,
) -> Result<BvnDecomposition<W>, BvnError> {
    let start_mass = matrix.mass.to_f64();
    let mut terms = Vec::new();
    while max_terms.is_none_or(|k| terms.len() < k) && !matrix.is_exhausted() {
        if !W::EXACT && matrix.mass.to_f64() <= 1e-10 * start_mass {
            break;
        }
        terms.push(extract_matching(matrix, rng)?);
    }
    let residual = if start_mass > 0.0 { matrix.mass.to_f64() / start_mass } else { 0.0 };
    Ok(BvnDecomposition { terms, residual })
}

/// Largest entrywise gap between `original` and `sum(lambda_i P_i) + R`,
/// where `R` is the matrix left after decomposition. Zero means exact.
pub fn reconstruction_error<W: Weight>(
    original: &[(usize, usize, W)],
    decomposition: &BvnDecomposition<W>,
    residual: &StochasticSupportMatrix<W>,
) -> f64 {
    let mut rebuilt: HashMap<(usize, usize), f64> = HashMap::new();
    let mut exact: HashMap<(usize, usize), u128> = HashMap::new();
    let mut add = |key: (usize, usize), w: W| {
        if W::EXACT {
            *exact.entry(key).or_default() += w.to_f64() as u128;
        } else {
            *rebuilt.entry(key).or_default() += w.to_f64();
        }
    };
    for term in &decomposition.terms {
        for (r, &c) in term.permutation.iter().enumerate() {
            add((r, c), term.lambda);
        }
    }
    for (r, c, w) in residual.entries() {
        add((r, c), w);
    }
    let mut worst = 0.0f64;
    let mut orig_keys = std::collections::HashSet::new();
    for &(r, c, w) in original {
        orig_keys.insert((r, c));
        let got = if W::EXACT {
            exact.get(&(r, c)).copied().unwrap_or(0) as f64
        } else {
            rebuilt.get(&(r, c)).copied().unwrap_or(0.0)
        };
        worst = worst.max((got - w.to_f64()).abs());
    }
    let extra: Box<dyn Iterator<Item = ((usize, usize), f64)>> = if W::EXACT {
        Box::new(exact.into_iter().map(|(k, v)| (k, v as f64)))
    } else {
        Box::new(rebuilt.into_iter())
    };
    for (key, v) in extra {
        if !orig_keys.contains(&key) {
            worst = worst.max(v.abs());
        }
    }
    worst
}

/// Float matrix `sum_i lambda_i P_i` over `perms` random permutations with
/// random positive coefficients summing to one. Coinciding entries merge.
pub fn gen_convex_permutations(n: usize, perms: usize, seed: u64) -> Vec<(usize, usize, f64)> {
    let mut rng = seeded(seed, Purpose::Generate);
    let raw: Vec<f64> = (0..perms).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut acc: HashMap<(usize, usize), f64> = HashMap::new();
    let mut order: Vec<(usize, usize)> = Vec::new();
    let mut perm: Vec<usize> = (0..n).collect();
    for lambda in raw.iter().map(|w| w / total) {
        perm.shuffle(&mut rng);
        for (r, &c) in perm.iter().enumerate() {
            let e = acc.entry((r, c)).or_insert_with(|| {
                order.push((r, c));
                0.0
            });
            *e += lambda;
        }
    }
    order.into_iter().map(|(r, c)| (r, c, acc[&(r, c)])).collect()
}

/// Integer matrix with every line summing to `degree`: the multiplicity
/// matrix of a union of `degree` random permutations.
pub fn gen_integer_regular(n: usize, degree: usize, seed: u64) -> Vec<(usize, usize, u64)> {
    let mut rng = seeded(seed, Purpose::Generate);
    let mut acc: HashMap<(usize, usize), u64> = HashMap::new();
    let mut order: Vec<(usize, usize)> = Vec::new();
    let mut perm: Vec<usize> = (0..n).collect();
    for _ in 0..degree {
        perm.shuffle(&mut rng);
        for (r, &c) in perm.iter().enumerate() {
            let e = acc.entry((r, c)).or_insert_with(|| {
                order.push((r, c));
                0
            });
            *e += 1;
        }
    }
    order.into_iter().map(|(r, c)| (r, c, acc[&(r, c)])).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_pcg::Pcg32;

    fn identity(n: usize) -> Vec<(usize, usize, f64)> {
        (0..n).map(|i| (i, i, 1.0)).collect()
    }

    #[test]
    fn load_examples() {
        let half = vec![(0, 0, 0.5), (0, 1, 0.5), (1, 0, 0.5), (1, 1, 0.5)];
        let m = StochasticSupportMatrix::load(2, &half).unwrap();
        assert_eq!(m.mass(), 2.0);
        let id = StochasticSupportMatrix::load(5, &identity(5)).unwrap();
        assert_eq!(id.live_entries(), 5);

        let skew = vec![(0, 0, 0.6), (0, 1, 0.5), (1, 0, 0.4), (1, 1, 0.5)];
        match StochasticSupportMatrix::load(2, &skew) {
            Err(BvnError::NotDoublyStochastic { line: Line::Row, index: 0, sum, .. }) => {
                assert!((sum - 1.1).abs() < 1e-12)
            }
            other => panic!("expected row 0 to be reported, got {other:?}"),
        }
    }

    #[test]
    fn load_rejects_bad_entries() {
        assert_eq!(
            StochasticSupportMatrix::load(1, &[(0, 0, 0.5), (0, 0, 0.5)]).unwrap_err(),
            BvnError::Duplicate { row: 0, col: 0 }
        );
        assert_eq!(
            StochasticSupportMatrix::load(1, &[(0, 0, 0.0)]).unwrap_err(),
            BvnError::NonPositive { row: 0, col: 0 }
        );
        assert!(matches!(
            StochasticSupportMatrix::load(1, &[(0, 1, 1.0)]),
            Err(BvnError::OutOfRange { .. })
        ));
        assert!(matches!(
            StochasticSupportMatrix::<u64>::load(2, &[(0, 0, 1), (1, 1, 2)]),
            Err(BvnError::NotDoublyStochastic { .. })
        ));
    }

    #[test]
    fn identity_extracts_in_one_term() {
        let mut m = StochasticSupportMatrix::load(6, &identity(6)).unwrap();
        let mut rng = Pcg32::seed_from_u64(1);
        let d = decompose(&mut m, None, &mut rng).unwrap();
        assert_eq!(d.terms.len(), 1);
        assert_eq!(d.terms[0].lambda, 1.0);
        assert_eq!(d.terms[0].permutation, (0..6).collect::<Vec<_>>());
        assert_eq!(m.live_entries(), 0);
        assert_eq!(d.residual, 0.0);
    }

    #[test]
    fn uniform_two_by_two() {
        let half = vec![(0, 0, 0.5), (0, 1, 0.5), (1, 0, 0.5), (1, 1, 0.5)];
        let mut m = StochasticSupportMatrix::load(2, &half).unwrap();
        let mut rng = Pcg32::seed_from_u64(2);
        let first = extract_matching(&mut m, &mut rng).unwrap();
        assert_eq!(first.lambda, 0.5);
        let second = extract_matching(&mut m, &mut rng).unwrap();
        assert_eq!(second.lambda, 0.5);
        assert_ne!(first.permutation, second.permutation);
        assert_eq!(m.live_entries(), 0);
        assert_eq!(extract_matching(&mut m, &mut rng).unwrap_err(), BvnError::Exhausted);
    }

    #[test]
    fn k_limits_terms() {
        let t = gen_convex_permutations(16, 5, 3);
        let mut m = StochasticSupportMatrix::load(16, &t).unwrap();
        let mut rng = Pcg32::seed_from_u64(3);
        let d = decompose(&mut m, Some(1), &mut rng).unwrap();
        assert_eq!(d.terms.len(), 1);
        assert!(d.residual > 0.0 && d.residual < 1.0);
        assert!(m.check_balanced().is_ok());
    }

    #[test]
    fn generators_are_balanced() {
        let t = gen_convex_permutations(32, 7, 4);
        assert!(StochasticSupportMatrix::load(32, &t).is_ok());
        let t = gen_integer_regular(32, 5, 4);
        let m = StochasticSupportMatrix::load(32, &t).unwrap();
        assert_eq!(m.mass(), 32 * 5);
    }
}
