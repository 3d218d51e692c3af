//! Prefix-weight index over a fixed-order array.
//!
//! Positions keep their arrival order, so building needs no sorting: the
//! cumulative structure is laid over the array in place, in linear time.
//! Sampling, point updates and deletions walk one root-to-leaf path.
//!
//! Two weight types are supported: `f64` for doubly stochastic input and
//! `u64` for exact integer arithmetic.

use std::fmt::Debug;

use rand::Rng;

/// Arithmetic the index needs from a weight type.
pub trait Weight: Copy + PartialOrd + Debug + Send + Sync + 'static {
    const ZERO: Self;
    /// Whether arithmetic is exact (integers) or subject to rounding.
    const EXACT: bool;

    fn checked_add(self, other: Self) -> Option<Self>;
    /// `self - other`; callers guarantee `other <= self` in exact mode.
    fn minus(self, other: Self) -> Self;
    fn is_valid(self) -> bool;
    fn is_positive(self) -> bool {
        self > Self::ZERO
    }
    /// Uniform draw from `[0, bound)`; `bound` must be positive.
    fn draw_below<R: Rng + ?Sized>(bound: Self, rng: &mut R) -> Self;
    /// Largest value strictly below `bound`.
    fn just_below(bound: Self) -> Self;
    /// Sum of a slice, compensated where rounding applies.
    fn sum(values: &[Self]) -> Option<Self>;
    fn to_f64(self) -> f64;
    /// Entries at or below this after subtraction count as deleted.
    fn zero_threshold() -> Self;
}

impl Weight for f64 {
    const ZERO: Self = 0.0;
    const EXACT: bool = false;

    fn checked_add(self, other: Self) -> Option<Self> {
        let s = self + other;
        s.is_finite().then_some(s)
    }

    fn minus(self, other: Self) -> Self {
        self - other
    }

    fn is_valid(self) -> bool {
        self.is_finite() && self >= 0.0
    }

    fn draw_below<R: Rng + ?Sized>(bound: Self, rng: &mut R) -> Self {
        let r = rng.gen::<f64>() * bound;
        if r >= bound {
            Self::just_below(bound)
        } else {
            r
        }
    }

    fn just_below(bound: Self) -> Self {
        if bound > 0.0 {
            f64::from_bits(bound.to_bits() - 1)
        } else {
            0.0
        }
    }

    fn sum(values: &[Self]) -> Option<Self> {
        // Neumaier's variant of Kahan summation.
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        for &v in values {
            let t = sum + v;
            if sum.abs() >= v.abs() {
                comp += (sum - t) + v;
            } else {
                comp += (v - t) + sum;
            }
            sum = t;
        }
        let total = sum + comp;
        total.is_finite().then_some(total)
    }

    fn to_f64(self) -> f64 {
        self
    }

    fn zero_threshold() -> Self {
        1e-12
    }
}

impl Weight for u64 {
    const ZERO: Self = 0;
    const EXACT: bool = true;

    fn checked_add(self, other: Self) -> Option<Self> {
        u64::checked_add(self, other)
    }

    fn minus(self, other: Self) -> Self {
        self - other
    }

    fn is_valid(self) -> bool {
        true
    }

    fn draw_below<R: Rng + ?Sized>(bound: Self, rng: &mut R) -> Self {
        rng.gen_range(0..bound)
    }

    fn just_below(bound: Self) -> Self {
        bound.saturating_sub(1)
    }

    fn sum(values: &[Self]) -> Option<Self> {
        values.iter().try_fold(0u64, |acc, &v| acc.checked_add(v))
    }

    fn to_f64(self) -> f64 {
        self as f64
    }

    fn zero_threshold() -> Self {
        0
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SamplerError {
    #[error("weight at position {position} is negative or not finite")]
    InvalidWeight { position: usize },
    #[error("weights overflow the accumulator")]
    Overflow,
    #[error("no live weight to sample from")]
    Empty,
    #[error("position {position} out of range for {len} elements")]
    OutOfRange { position: usize, len: usize },
    #[error("cumulative value outside [0, total)")]
    CumulativeOutOfRange,
    #[error("no live weight outside excluded position {excluded}")]
    NoMassOutside { excluded: usize },
}

/// Fenwick-layout cumulative weights over positions `0..len` in arrival order.
#[derive(Debug, Clone)]
pub struct PrefixWeightIndex<W: Weight> {
    weights: Vec<W>,
    // 1-based Fenwick array; tree[i] covers weights (i - lowbit(i), i].
    tree: Vec<W>,
    total: W,
    live: usize,
    top_bit: usize,
    // Total at the last full rebuild; float mode rebuilds once the total has
    // halved so that accumulated rounding stays relative to the live mass.
    rebuilt_at: W,
}

#[inline]
fn lowbit(i: usize) -> usize {
    i & i.wrapping_neg()
}

impl<W: Weight> PrefixWeightIndex<W> {
    /// Linear-time build over `weights` in the order given.
    pub fn build(weights: Vec<W>) -> Result<Self, SamplerError> {
        if let Some(position) = weights.iter().position(|w| !w.is_valid()) {
            return Err(SamplerError::InvalidWeight { position });
        }
        let len = weights.len();
        let top_bit = if len == 0 { 0 } else { 1usize << (usize::BITS - 1 - len.leading_zeros()) };
        let mut index = Self {
            weights,
            tree: Vec::new(),
            total: W::ZERO,
            live: 0,
            top_bit,
            rebuilt_at: W::ZERO,
        };
        index.rebuild()?;
        Ok(index)
    }

    fn rebuild(&mut self) -> Result<(), SamplerError> {
        let len = self.weights.len();
        let mut tree = Vec::with_capacity(len + 1);
        tree.push(W::ZERO);
        tree.extend_from_slice(&self.weights);
        for i in 1..=len {
            let parent = i + lowbit(i);
            if parent <= len {
                tree[parent] = tree[parent].checked_add(tree[i]).ok_or(SamplerError::Overflow)?;
            }
        }
        self.tree = tree;
        self.total = W::sum(&self.weights).ok_or(SamplerError::Overflow)?;
        self.live = self.weights.iter().filter(|w| w.is_positive()).count();
        self.rebuilt_at = self.total;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total(&self) -> W {
        self.total
    }

    /// Number of positions with positive weight.
    pub fn live_count(&self) -> usize {
        self.live
    }

    pub fn weight(&self, position: usize) -> W {
        self.weights[position]
    }

    pub fn weights(&self) -> &[W] {
        &self.weights
    }

    /// Sum of the weights strictly before `position`.
    pub fn prefix(&self, position: usize) -> W {
        let mut i = position.min(self.len());
        let mut acc = W::ZERO;
        while i > 0 {
            // Overflow is impossible: the full total was checked at build/update.
            acc = acc.checked_add(self.tree[i]).unwrap_or(acc);
            i -= lowbit(i);
        }
        acc
    }

    /// The position `i` with `prefix(i) <= r < prefix(i) + weight(i)`.
    pub fn find_by_cumulative(&self, r: W) -> Result<usize, SamplerError> {
        if self.live == 0 || !self.total.is_positive() {
            return Err(SamplerError::Empty);
        }
        if !(W::ZERO..self.total).contains(&r) {
            return Err(SamplerError::CumulativeOutOfRange);
        }
        Ok(self.descend(r))
    }

    fn descend(&self, r: W) -> usize {
        let len = self.len();
        let mut pos = 0;
        let mut rem = r;
        let mut step = self.top_bit;
        while step > 0 {
            let next = pos + step;
            if next <= len && self.tree[next] <= rem {
                pos = next;
                rem = rem.minus(self.tree[next]);
            }
            step >>= 1;
        }
        if pos < len && self.weights[pos].is_positive() {
            pos
        } else {
            // Only reachable through float rounding at a range boundary.
            self.nearest_live(pos, usize::MAX)
        }
    }

    /// Closest live position to `pos` other than `avoid`, preferring lower.
    fn nearest_live(&self, pos: usize, avoid: usize) -> usize {
        let len = self.len();
        let start = pos.min(len);
        let below = (0..start).rev().find(|&i| i != avoid && self.weights[i].is_positive());
        below
            .or_else(|| (start..len).find(|&i| i != avoid && self.weights[i].is_positive()))
            .expect("live position exists")
    }

    /// Draws a position with probability proportional to its weight.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<usize, SamplerError> {
        if self.live == 0 || !self.total.is_positive() {
            return Err(SamplerError::Empty);
        }
        let r = W::draw_below(self.total, rng);
        Ok(self.descend(r))
    }

    /// Draws a position proportionally to weight among all live positions
    /// other than `excluded`. Exact: the excluded interval is cut out of the
    /// cumulative range instead of being rejected.
    pub fn sample_excluding<R: Rng + ?Sized>(
        &self,
        excluded: usize,
        rng: &mut R,
    ) -> Result<usize, SamplerError> {
        let len = self.len();
        if excluded >= len {
            return Err(SamplerError::OutOfRange { position: excluded, len });
        }
        let w_ex = self.weights[excluded];
        let others = self.live - usize::from(w_ex.is_positive());
        if others == 0 || self.total.partial_cmp(&w_ex) != Some(std::cmp::Ordering::Greater) {
            return Err(SamplerError::NoMassOutside { excluded });
        }
        let rest = self.total.minus(w_ex);
        if !rest.is_positive() {
            return Err(SamplerError::NoMassOutside { excluded });
        }
        let mut r = W::draw_below(rest, rng);
        if r >= self.prefix(excluded) {
            r = r.checked_add(w_ex).unwrap_or(self.total);
            if r.partial_cmp(&self.total) != Some(std::cmp::Ordering::Less) {
                r = W::just_below(self.total);
            }
        }
        let pos = self.descend(r);
        if pos == excluded {
            // Float rounding put r back inside the excluded interval.
            Ok(self.nearest_live(excluded + 1, excluded))
        } else {
            Ok(pos)
        }
    }

    /// Sets the weight at `position`.
    pub fn update(&mut self, position: usize, new_weight: W) -> Result<(), SamplerError> {
        let len = self.len();
        if position >= len {
            return Err(SamplerError::OutOfRange { position, len });
        }
        if !new_weight.is_valid() {
            return Err(SamplerError::InvalidWeight { position });
        }
        let old = self.weights[position];
        if new_weight == old {
            return Ok(());
        }
        match (old.is_positive(), new_weight.is_positive()) {
            (true, false) => self.live -= 1,
            (false, true) => self.live += 1,
            _ => {}
        }
        self.weights[position] = new_weight;
        if self.live == 0 {
            // Clear any rounding residue left in internal nodes.
            self.tree.iter_mut().for_each(|t| *t = W::ZERO);
            self.total = W::ZERO;
            self.rebuilt_at = W::ZERO;
            return Ok(());
        }
        let grow = new_weight > old;
        let delta = if grow { new_weight.minus(old) } else { old.minus(new_weight) };
        if grow {
            self.total = self.total.checked_add(delta).ok_or(SamplerError::Overflow)?;
        } else {
            self.total = self.total.minus(delta);
        }
        let mut i = position + 1;
        while i <= len {
            self.tree[i] = if grow {
                self.tree[i].checked_add(delta).ok_or(SamplerError::Overflow)?
            } else {
                self.tree[i].minus(delta)
            };
            i += lowbit(i);
        }
        if !W::EXACT && self.total.to_f64() < 0.5 * self.rebuilt_at.to_f64() {
            self.rebuild()?;
        }
        Ok(())
    }

    /// Removes `position` from sampling; same as updating its weight to zero.
    pub fn delete(&mut self, position: usize) -> Result<(), SamplerError> {
        self.update(position, W::ZERO)
    }
}
