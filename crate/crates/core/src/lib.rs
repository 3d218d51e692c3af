//! Perfect matchings in d-regular bipartite graphs by truncated random-walk
//! augmentation, matchings in the support of doubly stochastic matrices with
//! Birkhoff–von Neumann decomposition, baseline matchers, and an adaptive
//! adversary for deterministic probing algorithms.

pub mod adversary;
pub mod bench;
pub mod baselines;
pub mod bvn;
pub mod canonical;
pub mod generate;
pub mod graph;
pub mod io;
pub mod rng;
pub mod sampler;
pub mod walk;

pub use graph::{validate, verify_matching, BipartiteRegularGraph, Matching, MatchingViolation, Violation};
pub use walk::{budget, find_perfect_matching, HVertex, WalkMatcher, WalkMode, WalkStats};
