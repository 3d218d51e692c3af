//! Acceptance suite: eight criteria, one PASS/FAIL line each.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_pcg::Pcg32;
use regmatch::adversary::{run_game, GreedyAugmentProber, Prober, ScanProber};
use regmatch::baselines::{euler_matching, euler_split, hopcroft_karp};
use regmatch::bench::{ceil_sqrt, run_cell, truncated_bound, untruncated_bound, Algo, Cell};
use regmatch::bvn::{decompose, gen_convex_permutations, gen_integer_regular, reconstruction_error, StochasticSupportMatrix};
use regmatch::canonical::validate_canonical;
use regmatch::generate::gen_union_permutations;
use regmatch::graph::verify_matching_adj;
use regmatch::sampler::PrefixWeightIndex;
use regmatch::walk::harmonic;
use regmatch::{validate, verify_matching, WalkMatcher, WalkMode};

use common::{brute_force_max_matching, chi_square_p};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn mean_steps(algo: Algo, n: usize, d: usize, seeds: u64) -> Result<f64, String> {
    let mut total = 0u64;
    for seed in 0..seeds {
        total += run_cell(Cell { algo, n, d, seed }).map_err(|e| e.to_string())?.total_steps;
    }
    Ok(total as f64 / seeds as f64)
}

fn correctness_sweep() -> Outcome {
    let start = Instant::now();
    let mut runs = 0;
    for n in [8usize, 64, 256, 1024, 4096] {
        for d in [2, 3, 8, ceil_sqrt(n)] {
            for seed in 0..20 {
                run_cell(Cell { algo: Algo::Walk, n, d, seed }).map_err(|e| e.to_string())?;
                runs += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 120.0, || format!("{runs} runs verified but took {secs:.1}s"))?;
    Ok(format!("{runs} runs, all perfect and verified, {secs:.2}s"))
}

fn hitting_time() -> Outcome {
    let n = 256;
    let walks = 10_000;
    let mut parts = Vec::new();
    for d in [2usize, 8, 64] {
        let graph = gen_union_permutations(n, d, 100 + d as u64, false).map_err(|e| e.to_string())?;
        let mut rng = Pcg32::seed_from_u64(d as u64);
        let mut state = WalkMatcher::new(&graph);
        for (k, bound) in [(n, 3.0), (n / 2, 4.0)] {
            state.grow_to(n - k, WalkMode::Truncated, None, &mut rng).map_err(|e| e.to_string())?;
            let mut total = 0u64;
            for _ in 0..walks {
                total += state.truncated_walk(None, &mut rng).map_err(|e| e.to_string())?.steps_used;
            }
            let mean = total as f64 / walks as f64;
            ensure(mean <= bound * 1.10, || format!("d={d} k={k}: mean {mean:.3} > {:.3}", bound * 1.10))?;
            parts.push(format!("d={d},k={k}:{mean:.3}"));
        }
    }
    Ok(parts.join(" "))
}

fn untruncated_total() -> Outcome {
    let (n, d) = (1024, 8);
    let mean = mean_steps(Algo::WalkUntruncated, n, d, 100)?;
    let bound = untruncated_bound(n);
    ensure(mean <= bound, || format!("mean {mean:.1} > {bound:.1}"))?;
    Ok(format!("mean {mean:.1} <= {bound:.1} (n + nH(n) = {:.1})", n as f64 * (1.0 + harmonic(n))))
}

fn truncated_total() -> Outcome {
    let (n, d) = (1024, 8);
    let mean = mean_steps(Algo::Walk, n, d, 100)?;
    let bound = truncated_bound(n);
    ensure(mean <= bound, || format!("mean {mean:.1} > {bound:.1}"))?;
    let mut ratios = Vec::new();
    for k in 8..=13 {
        let n = 1usize << k;
        let m = mean_steps(Algo::Walk, n, 16, 20)?;
        ratios.push(m / (n as f64 * harmonic(n)));
    }
    let hi = ratios.iter().cloned().fold(f64::MIN, f64::max);
    let lo = ratios.iter().cloned().fold(f64::MAX, f64::min);
    ensure(hi / lo <= 2.0, || format!("steps/(nH(n)) spread {:.3} over {ratios:.3?}", hi / lo))?;
    Ok(format!("mean {mean:.1} <= {bound:.1}; steps/(nH(n)) spread {:.3} across n=2^8..2^13", hi / lo))
}

fn birkhoff() -> Outcome {
    let n = 128;
    let entries = gen_convex_permutations(n, 50, 5);
    let m = entries.len();
    let mut matrix = StochasticSupportMatrix::load(n, &entries).map_err(|e| e.to_string())?;
    let mut rng = Pcg32::seed_from_u64(5);
    let dec = decompose(&mut matrix, None, &mut rng).map_err(|e| e.to_string())?;
    let err = reconstruction_error(&entries, &dec, &matrix);
    let terms = dec.terms.len();
    let sum = dec.lambda_sum();
    ensure(err <= 1e-9, || format!("float reconstruction error {err:e}"))?;
    ensure(terms <= m - n + 1, || format!("{terms} terms > m - n + 1 = {}", m - n + 1))?;
    ensure((sum - 1.0).abs() <= 1e-9, || format!("lambda sum {sum}"))?;

    let (n_int, degree) = (64, 12u64);
    let ints = gen_integer_regular(n_int, degree as usize, 6);
    let mut matrix = StochasticSupportMatrix::load(n_int, &ints).map_err(|e| e.to_string())?;
    let dec_int = decompose(&mut matrix, None, &mut rng).map_err(|e| e.to_string())?;
    let err_int = reconstruction_error(&ints, &dec_int, &matrix);
    ensure(err_int == 0.0, || format!("integer reconstruction error {err_int}"))?;
    ensure(dec_int.lambda_sum() == degree, || format!("integer lambda sum {}", dec_int.lambda_sum()))?;
    Ok(format!(
        "float: {terms} terms (limit {}), error {err:.1e}; integer: {} terms, exact, sum {degree}",
        m - n + 1,
        dec_int.terms.len()
    ))
}

fn adversary() -> Outcome {
    let mut parts = Vec::new();
    for d in [2usize, 4, 8, 16, 32] {
        let probers: [Box<dyn Prober>; 2] = [Box::new(ScanProber), Box::new(GreedyAugmentProber::default())];
        for mut prober in probers {
            let report = run_game(prober.as_mut(), d).map_err(|e| e.to_string())?;
            let name = report.prober;
            let probes = report.probes_to_hidden.ok_or_else(|| format!("{name} d={d}: never found M′"))?;
            ensure(probes >= (d * d) as u64, || format!("{name} d={d}: {probes} < {}", d * d))?;
            ensure(validate_canonical(&report.graph.graph, d, &report.graph.hidden).is_ok(), || {
                format!("{name} d={d}: completion is not in the family")
            })?;
            ensure(report.is_consistent(), || format!("{name} d={d}: answers missing from completion"))?;
            parts.push(format!("{name}/{d}:{probes}"));
        }
    }
    Ok(format!("probes to first M′ edge {}", parts.join(" ")))
}

fn sampler() -> Outcome {
    let mut rng = Pcg32::seed_from_u64(2);
    let mut ops = 0;
    for len in [1usize, 5, 16, 40, 64] {
        let mut naive: Vec<u64> = (0..len).map(|_| rng.gen_range(0..30)).collect();
        let mut index = PrefixWeightIndex::build(naive.clone()).map_err(|e| e.to_string())?;
        for _ in 0..10_000 {
            ops += 1;
            let pos = rng.gen_range(0..len);
            match rng.gen_range(0..3) {
                0 => {
                    let w = rng.gen_range(0..30);
                    index.update(pos, w).map_err(|e| e.to_string())?;
                    naive[pos] = w;
                }
                1 => {
                    index.delete(pos).map_err(|e| e.to_string())?;
                    naive[pos] = 0;
                }
                _ => {
                    let total: u64 = naive.iter().sum();
                    if total > 0 {
                        let r = rng.gen_range(0..total);
                        let mut acc = 0;
                        let expected = naive.iter().position(|&w| {
                            acc += w;
                            r < acc
                        });
                        let got = index.find_by_cumulative(r).map_err(|e| e.to_string())?;
                        ensure(Some(got) == expected, || format!("len {len}: r={r} gave {got}, scan {expected:?}"))?;
                    }
                }
            }
            ensure(index.total() == naive.iter().sum::<u64>(), || "total diverged".into())?;
            ensure(index.prefix(pos) == naive[..pos].iter().sum::<u64>(), || "prefix diverged".into())?;
        }
    }

    let draws = 100_000;
    let index = PrefixWeightIndex::build(vec![1.0, 2.0, 3.0, 4.0]).map_err(|e| e.to_string())?;
    let mut counts = [0u64; 4];
    for _ in 0..draws {
        counts[index.sample(&mut rng).map_err(|e| e.to_string())?] += 1;
    }
    let p_sample = chi_square_p(&counts, &[0.1, 0.2, 0.3, 0.4]);
    ensure(p_sample > 1e-3, || format!("sample p={p_sample:.2e} {counts:?}"))?;

    let excluded = 2;
    let mut counts = [0u64; 4];
    for _ in 0..draws {
        counts[index.sample_excluding(excluded, &mut rng).map_err(|e| e.to_string())?] += 1;
    }
    ensure(counts[excluded] == 0, || format!("excluded position drawn {} times", counts[excluded]))?;
    let p_excl = chi_square_p(&[counts[0], counts[1], counts[3]], &[1.0 / 7.0, 2.0 / 7.0, 4.0 / 7.0]);
    ensure(p_excl > 1e-3, || format!("sample_excluding p={p_excl:.2e} {counts:?}"))?;
    Ok(format!("{ops} ops agree with linear scan; chi-square p={p_sample:.3} and p={p_excl:.3}; excluded drawn 0 times"))
}

fn baselines() -> Outcome {
    fn all_graphs(masks: &mut Vec<u32>, n_left: usize, n_right: usize, count: &mut u64) -> Result<(), String> {
        if masks.len() == n_left {
            let adj: Vec<Vec<usize>> = masks.iter().map(|&m| (0..n_right).filter(|&v| m >> v & 1 == 1).collect()).collect();
            let m = hopcroft_karp(&adj, n_right);
            ensure(verify_matching_adj(&adj, &m, false).is_ok(), || format!("{adj:?}: invalid matching"))?;
            let best = brute_force_max_matching(&adj, n_right);
            ensure(m.size() == best, || format!("{adj:?}: size {} vs {best}", m.size()))?;
            *count += 1;
            return Ok(());
        }
        for mask in masks.last().copied().unwrap_or(0)..(1u32 << n_right) {
            masks.push(mask);
            all_graphs(masks, n_left, n_right, count)?;
            masks.pop();
        }
        Ok(())
    }
    let mut graphs = 0;
    for n_left in 0..=5 {
        for n_right in 0..=5 {
            all_graphs(&mut Vec::new(), n_left, n_right, &mut graphs)?;
        }
    }

    let mut regular = 0;
    for (n, d) in [(1usize, 1usize), (2, 2), (8, 4), (64, 8), (256, 16), (512, 32), (64, 64)] {
        for seed in 0..5 {
            let g = gen_union_permutations(n, d, seed, false).map_err(|e| e.to_string())?;
            let (m, _) = euler_matching(&g).map_err(|e| e.to_string())?;
            ensure(verify_matching(&g, &m, true).is_ok(), || format!("euler n={n} d={d} seed={seed}"))?;
            if d >= 2 {
                let (a, b) = euler_split(&g).map_err(|e| e.to_string())?;
                ensure(a.d() == d / 2 && validate(&a).is_ok() && validate(&b).is_ok(), || {
                    format!("split n={n} d={d} seed={seed}")
                })?;
            }
            regular += 1;
        }
    }
    Ok(format!("{graphs} small graphs match brute force; {regular} power-of-two inputs matched and split"))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("correctness sweep", correctness_sweep),
        ("hitting time", hitting_time),
        ("untruncated total steps", untruncated_total),
        ("truncated total steps", truncated_total),
        ("birkhoff decomposition", birkhoff),
        ("adversary lower bound", adversary),
        ("sampler", sampler),
        ("baseline cross-checks", baselines),
    ];
    let results: Vec<Outcome> = std::thread::scope(|s| {
        let handles: Vec<_> = criteria.iter().map(|(_, f)| s.spawn(f)).collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err("panicked".into())))
            .collect()
    });
    let mut failed = 0;
    for (i, ((name, _), result)) in criteria.iter().zip(&results).enumerate() {
        match result {
            Ok(detail) => println!("criterion {}: PASS {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
