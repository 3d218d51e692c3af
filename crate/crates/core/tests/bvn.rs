use proptest::prelude::*;
use rand::SeedableRng;
use rand_pcg::Pcg32;
use regmatch::baselines::hopcroft_karp;
use regmatch::bvn::{
    decompose, extract_matching, gen_convex_permutations, gen_integer_regular, reconstruction_error,
    StochasticSupportMatrix,
};
use regmatch::sampler::Weight;

fn support_rows<W: Weight>(n: usize, entries: &[(usize, usize, W)]) -> Vec<Vec<usize>> {
    let mut rows = vec![Vec::new(); n];
    for &(r, c, _) in entries {
        rows[r].push(c);
    }
    rows
}

#[test]
fn float_full_decomposition_n128() {
    let n = 128;
    let entries = gen_convex_permutations(n, 50, 2024);
    let m = entries.len();
    assert_eq!(hopcroft_karp(&support_rows(n, &entries), n).size(), n);

    let mut matrix = StochasticSupportMatrix::load(n, &entries).unwrap();
    let mut rng = Pcg32::seed_from_u64(1);
    let dec = decompose(&mut matrix, None, &mut rng).unwrap();
    let err = reconstruction_error(&entries, &dec, &matrix);
    assert!(err <= 1e-9, "error {err}");
    assert!(dec.terms.len() <= m - n + 1, "{} terms, m={m}", dec.terms.len());
    assert!((dec.lambda_sum() - 1.0).abs() <= 1e-9, "sum {}", dec.lambda_sum());
    let support: std::collections::HashSet<(usize, usize)> = entries.iter().map(|&(r, c, _)| (r, c)).collect();
    for term in &dec.terms {
        assert!(term.lambda > 0.0);
        assert!(term.permutation.iter().enumerate().all(|(r, &c)| support.contains(&(r, c))));
    }
}

#[test]
fn integer_decomposition_is_exact() {
    let (n, degree) = (64, 12);
    let entries = gen_integer_regular(n, degree, 7);
    let mut matrix = StochasticSupportMatrix::load(n, &entries).unwrap();
    let mut rng = Pcg32::seed_from_u64(3);
    let dec = decompose(&mut matrix, None, &mut rng).unwrap();
    assert_eq!(dec.lambda_sum(), degree as u64);
    assert_eq!(reconstruction_error(&entries, &dec, &matrix), 0.0);
    assert_eq!(matrix.live_entries(), 0);
    assert!(dec.terms.len() <= entries.len() - n + 1);
}

#[test]
fn extracted_entries_are_positive_when_taken() {
    let n = 40;
    let entries = gen_convex_permutations(n, 12, 5);
    let mut matrix = StochasticSupportMatrix::load(n, &entries).unwrap();
    let mut rng = Pcg32::seed_from_u64(4);
    while matrix.live_entries() > 0 && matrix.mass() > 1e-10 * n as f64 {
        let before = matrix.clone();
        let term = extract_matching(&mut matrix, &mut rng).unwrap();
        for (r, &c) in term.permutation.iter().enumerate() {
            assert!(before.get(r, c) > 0.0, "entry ({r},{c}) was empty");
            assert!(before.get(r, c) >= term.lambda);
        }
    }
}

#[test]
fn partial_decomposition_leaves_balanced_residual() {
    let n = 50;
    let entries = gen_integer_regular(n, 9, 11);
    let mut matrix = StochasticSupportMatrix::load(n, &entries).unwrap();
    let mut rng = Pcg32::seed_from_u64(9);
    let dec = decompose(&mut matrix, Some(3), &mut rng).unwrap();
    assert_eq!(dec.terms.len(), 3);
    assert_eq!(matrix.check_balanced(), Ok(()));
    assert_eq!(matrix.line_sum() as u64 + dec.lambda_sum(), 9);
    assert_eq!(reconstruction_error(&entries, &dec, &matrix), 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn decomposition_invariants(n in 1usize..24, perms in 1usize..10, seed in any::<u64>()) {
        let entries = gen_convex_permutations(n, perms, seed);
        let mut matrix = StochasticSupportMatrix::load(n, &entries).unwrap();
        let mut rng = Pcg32::seed_from_u64(seed);
        let dec = decompose(&mut matrix, None, &mut rng).unwrap();
        prop_assert!(reconstruction_error(&entries, &dec, &matrix) <= 1e-9);
        prop_assert!((dec.lambda_sum() - 1.0).abs() <= 1e-9);
        prop_assert!(dec.terms.len() <= entries.len() - n + 1);

        let ints = gen_integer_regular(n, perms, seed);
        let mut matrix = StochasticSupportMatrix::load(n, &ints).unwrap();
        let dec = decompose(&mut matrix, None, &mut rng).unwrap();
        prop_assert_eq!(dec.lambda_sum(), perms as u64);
        prop_assert_eq!(reconstruction_error(&ints, &dec, &matrix), 0.0);
    }
}
