mod common;

use std::collections::HashMap;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_pcg::Pcg32;
use regmatch::bvn::{gen_convex_permutations, StochasticSupportMatrix};
use regmatch::generate::gen_union_permutations;
use regmatch::walk::{budget, loop_erase, WalkResult};
use regmatch::{find_perfect_matching, verify_matching, BipartiteRegularGraph, HVertex, Matching, WalkMatcher, WalkMode};

use common::chi_square_p;

/// Checks one step `from -> to` against H for `graph` and `matching`.
fn is_h_edge(graph: &BipartiteRegularGraph, matching: &Matching, from: HVertex, to: HVertex) -> bool {
    let free_q = |q: usize| matching.mate_of_q(q).is_none();
    let count = |p: usize, q: usize| graph.adj_p()[p].iter().filter(|&&x| x == q).count();
    let head_ok = |q: usize, is_free: bool| free_q(q) == is_free;
    match (from, to) {
        (HVertex::Source, HVertex::FreeP(p)) => matching.mate_of_p(p).is_none(),
        (HVertex::FreeP(p), HVertex::FreeQ(q)) => matching.mate_of_p(p).is_none() && count(p, q) > 0 && head_ok(q, true),
        (HVertex::FreeP(p), HVertex::Super(q)) => matching.mate_of_p(p).is_none() && count(p, q) > 0 && head_ok(q, false),
        (HVertex::Super(s), HVertex::FreeQ(q) | HVertex::Super(q)) => {
            let Some(p) = matching.mate_of_q(s) else { return false };
            let available = count(p, q) - usize::from(q == s);
            available > 0 && head_ok(q, matches!(to, HVertex::FreeQ(_)))
        }
        (HVertex::FreeQ(q), HVertex::Sink) => free_q(q),
        _ => false,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn walk_steps_are_edges_of_h_and_erasure_matches(
        n in 2usize..40,
        d in 2usize..7,
        seed in any::<u64>(),
        frac in 0.0f64..1.0,
    ) {
        prop_assume!(d <= n);
        let graph = gen_union_permutations(n, d, seed, false).unwrap();
        let mut rng = Pcg32::seed_from_u64(seed);
        let mut state = WalkMatcher::new(&graph);
        let k = ((n as f64 * frac) as usize).min(n - 1);
        state.grow_to(k, WalkMode::Truncated, None, &mut rng).unwrap();
        let b = budget(n, k).unwrap();
        let mut trace = Vec::new();
        for _ in 0..5 {
            let outcome = state.truncated_walk_traced(Some(b), &mut rng, &mut trace).unwrap();
            prop_assert_eq!(trace.len() as u64, outcome.steps_used + 1);
            for pair in trace.windows(2) {
                prop_assert!(is_h_edge(&graph, state.matching(), pair[0], pair[1]), "{:?}", pair);
            }
            match outcome.result {
                WalkResult::Success(path) => {
                    prop_assert_eq!(loop_erase(&trace).unwrap(), path.vertices().to_vec());
                }
                WalkResult::Fail => prop_assert_eq!(outcome.steps_used, b),
            }
        }
    }

    #[test]
    fn perfect_matching_on_random_graphs(n in 1usize..120, d in 1usize..9, seed in any::<u64>(), simple in any::<bool>()) {
        prop_assume!(d <= n);
        let graph = gen_union_permutations(n, d, seed, simple).unwrap();
        let mut rng = Pcg32::seed_from_u64(seed ^ 1);
        for mode in [WalkMode::Truncated, WalkMode::Untruncated] {
            let (m, stats) = find_perfect_matching(&graph, &mut rng, mode).unwrap();
            prop_assert_eq!(verify_matching(&graph, &m, true), Ok(()));
            prop_assert!(stats.total_steps >= stats.augmentations() as u64);
        }
    }
}

#[test]
fn budgets_are_positive_and_grow_with_phase() {
    for n in [1usize, 2, 10, 1000] {
        let mut prev = 0;
        for j in 0..n {
            let b = budget(n, j).unwrap();
            assert!(b >= 6 && b >= prev);
            prev = b;
        }
    }
}

fn transition_p(counts: &HashMap<HVertex, u64>, support: &[HVertex]) -> f64 {
    let observed: Vec<u64> = support.iter().map(|v| counts.get(v).copied().unwrap_or(0)).collect();
    assert_eq!(observed.iter().sum::<u64>(), counts.values().sum::<u64>(), "draw outside support");
    let probs = vec![1.0 / support.len() as f64; support.len()];
    chi_square_p(&observed, &probs)
}

#[test]
fn transitions_are_uniform() {
    let n = 24;
    let d = 6;
    let graph = gen_union_permutations(n, d, 3, true).unwrap();
    let mut rng = Pcg32::seed_from_u64(77);
    let mut state = WalkMatcher::new(&graph);
    state.grow_to(n / 2, WalkMode::Truncated, None, &mut rng).unwrap();
    let m = state.matching().clone();
    let classify = |q: usize| if m.mate_of_q(q).is_some() { HVertex::Super(q) } else { HVertex::FreeQ(q) };
    let draws = 30_000;

    let mut counts = HashMap::new();
    for _ in 0..draws {
        *counts.entry(state.sample_out_edge(HVertex::Source, &mut rng).unwrap()).or_insert(0) += 1;
    }
    let free_p: Vec<HVertex> = (0..n).filter(|&p| m.mate_of_p(p).is_none()).map(HVertex::FreeP).collect();
    assert!(transition_p(&counts, &free_p) > 1e-3);

    let HVertex::FreeP(p) = free_p[0] else { unreachable!() };
    let mut counts = HashMap::new();
    for _ in 0..draws {
        *counts.entry(state.sample_out_edge(HVertex::FreeP(p), &mut rng).unwrap()).or_insert(0) += 1;
    }
    let heads: Vec<HVertex> = graph.adj_p()[p].iter().map(|&q| classify(q)).collect();
    assert!(transition_p(&counts, &heads) > 1e-3);

    let (mp, mq) = m.pairs().next().unwrap();
    let mut counts = HashMap::new();
    for _ in 0..draws {
        *counts.entry(state.sample_out_edge(HVertex::Super(mq), &mut rng).unwrap()).or_insert(0) += 1;
    }
    assert!(!counts.contains_key(&HVertex::Super(mq)), "matched edge sampled");
    let heads: Vec<HVertex> = graph.adj_p()[mp].iter().filter(|&&q| q != mq).map(|&q| classify(q)).collect();
    assert_eq!(heads.len(), d - 1);
    assert!(transition_p(&counts, &heads) > 1e-3);
}

fn mean_hitting_time<G: regmatch::walk::RowSampler>(state: &mut WalkMatcher<'_, G>, walks: usize, rng: &mut Pcg32) -> f64 {
    let total: u64 = (0..walks).map(|_| state.truncated_walk(None, rng).unwrap().steps_used).sum();
    total as f64 / walks as f64
}

#[test]
fn hitting_time_small_graph() {
    let n = 64;
    for d in [2, 5] {
        let graph = gen_union_permutations(n, d, d as u64, false).unwrap();
        let mut rng = Pcg32::seed_from_u64(8);
        let mut state = WalkMatcher::new(&graph);
        assert_eq!(mean_hitting_time(&mut state, 1000, &mut rng), 3.0);
        state.grow_to(n / 2, WalkMode::Truncated, None, &mut rng).unwrap();
        let bound = 2.0 + n as f64 / (n / 2) as f64;
        let mean = mean_hitting_time(&mut state, 5000, &mut rng);
        assert!(mean <= bound * 1.1, "d={d} mean={mean}");
    }
}

#[test]
fn weighted_hitting_time() {
    let n = 64;
    let matrix = StochasticSupportMatrix::load(n, &gen_convex_permutations(n, 8, 4)).unwrap();
    let mut rng = Pcg32::seed_from_u64(12);
    let mut state = WalkMatcher::new(&matrix);
    assert_eq!(mean_hitting_time(&mut state, 1000, &mut rng), 3.0);
    state.grow_to(n / 2, WalkMode::Truncated, None, &mut rng).unwrap();
    let mean = mean_hitting_time(&mut state, 5000, &mut rng);
    assert!(mean <= 4.0 * 1.1, "mean={mean}");
}

#[test]
fn same_seed_same_matching() {
    let graph = gen_union_permutations(300, 4, 9, false).unwrap();
    let run = |seed| {
        let mut rng = Pcg32::seed_from_u64(seed);
        find_perfect_matching(&graph, &mut rng, WalkMode::Truncated).unwrap()
    };
    assert_eq!(run(5), run(5));
}
