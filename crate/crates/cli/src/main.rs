use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use regmatch::adversary::{run_game, GreedyAugmentProber, Prober, ScanProber};
use regmatch::bench::{self, Algo, BenchRecord, CSV_HEADER};
use regmatch::bvn::{self, decompose, reconstruction_error, MatrixMode, StochasticSupportMatrix};
use regmatch::canonical::gen_canonical;
use regmatch::generate::gen_union_permutations;
use regmatch::io::{self as rio, MatrixFile};
use regmatch::rng::{seeded, Purpose};
use regmatch::sampler::Weight;

#[derive(Parser)]
#[command(name = "regmatch", version, about = "Perfect matchings in regular bipartite graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a regular graph, a canonical adversary instance or a
    /// doubly stochastic matrix.
    Gen(GenArgs),
    /// Find and verify a perfect matching of a graph file.
    Match(MatchArgs),
    /// Birkhoff–von Neumann decomposition of a matrix file.
    Bvn(BvnArgs),
    /// Sweep a grid of sizes, degrees and seeds; emit CSV.
    Bench(BenchArgs),
    /// Play the adversary game against a reference prober.
    Game(GameArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Regular,
    Canonical,
    Ds,
}

#[derive(clap::Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    #[arg(long)]
    n: Option<usize>,
    /// Degree; for integer matrices, the common line sum.
    #[arg(long)]
    d: Option<usize>,
    /// Number of permutations in a float matrix.
    #[arg(long, default_value_t = 10)]
    perms: usize,
    /// Matrix arithmetic: float or integer.
    #[arg(long, default_value = "float")]
    mode: String,
    /// Forbid parallel edges in regular graphs.
    #[arg(long)]
    simple: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct MatchArgs {
    #[arg(long)]
    graph: PathBuf,
    /// walk, walk-untruncated, hk or euler.
    #[arg(long, default_value = "walk")]
    algo: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct BvnArgs {
    #[arg(long)]
    matrix: PathBuf,
    /// Number of terms to extract, or `full`.
    #[arg(long, default_value = "full")]
    k: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Largest entrywise reconstruction error accepted in float mode.
    #[arg(long, default_value_t = 1e-9)]
    tolerance: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct BenchArgs {
    /// Comma-separated algorithms.
    #[arg(long, default_value = "walk")]
    algo: String,
    /// Sizes: `N`, `2^k`, `a..b`, `2^a..2^b`, comma lists.
    #[arg(long, default_value = "2^8..2^12")]
    n: String,
    /// Degrees as for sizes, plus `sqrt`.
    #[arg(long, default_value = "8")]
    d: String,
    /// Seeds per cell.
    #[arg(long, default_value_t = 10)]
    seeds: u64,
    /// First seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Compare mean steps per cell with the step bounds; exit 3 on breach.
    #[arg(long)]
    check_bounds: bool,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProberKind {
    Scan,
    Greedy,
}

#[derive(clap::Args)]
struct GameArgs {
    #[arg(long)]
    d: usize,
    #[arg(long, value_enum, default_value = "greedy")]
    prober: ProberKind,
    /// Transcript CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure classes with their exit codes.
#[derive(Debug)]
enum Exit {
    Verification(String),
    Usage(String),
    Bound(String),
}

impl std::fmt::Display for Exit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Exit::Verification(m) | Exit::Usage(m) | Exit::Bound(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for Exit {}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Match(a) => cmd_match(a),
        Command::Bvn(a) => cmd_bvn(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Game(a) => cmd_game(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            match err.downcast_ref::<Exit>() {
                Some(Exit::Verification(_)) => ExitCode::from(1),
                Some(Exit::Usage(_)) | None => ExitCode::from(2),
                Some(Exit::Bound(_)) => ExitCode::from(3),
            }
        }
    }
}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Exit::Usage(msg.into()).into()
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn input(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?))
}

fn cmd_gen(a: GenArgs) -> Result<()> {
    let need = |v: Option<usize>, name: &str| v.ok_or_else(|| usage(format!("--{name} is required for this kind")));
    let mut out = output(&a.out)?;
    match a.kind {
        Kind::Regular => {
            let (n, d) = (need(a.n, "n")?, need(a.d, "d")?);
            let g = gen_union_permutations(n, d, a.seed, a.simple).map_err(|e| usage(e.to_string()))?;
            rio::write_graph(&g, &mut out, false)?;
        }
        Kind::Canonical => {
            let d = need(a.d, "d")?;
            let c = gen_canonical(d, a.seed).map_err(|e| usage(e.to_string()))?;
            writeln!(out, "# canonical d={d}: P1=0..{0} P2={0}..{1} t={1} Q1=0..{0} Q2={0}..{1} s={1}", 2 * d, 4 * d)?;
            let hidden: Vec<String> = c.hidden.iter().map(|(p, q)| format!("{p}-{q}")).collect();
            writeln!(out, "# hidden {}", hidden.join(" "))?;
            rio::write_graph(&c.graph, &mut out, false)?;
        }
        Kind::Ds => {
            let n = need(a.n, "n")?;
            let mode: MatrixMode = a.mode.parse().map_err(|_| usage(format!("unknown mode {:?}", a.mode)))?;
            match mode {
                MatrixMode::Float => {
                    if a.perms == 0 {
                        return Err(usage("--perms must be positive"));
                    }
                    let entries = bvn::gen_convex_permutations(n, a.perms, a.seed);
                    rio::write_matrix(n, mode, &entries, &mut out)?;
                }
                MatrixMode::Integer => {
                    let d = need(a.d, "d")?;
                    let entries = bvn::gen_integer_regular(n, d, a.seed);
                    rio::write_matrix(n, mode, &entries, &mut out)?;
                }
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn cmd_match(a: MatchArgs) -> Result<()> {
    let algo: Algo = a.algo.parse().map_err(|e: bench::BenchError| usage(e.to_string()))?;
    if algo.is_game() {
        return Err(usage(format!("{algo} is not a matching algorithm")));
    }
    let graph = rio::read_graph(input(&a.graph)?).map_err(|e| usage(format!("{}: {e}", a.graph.display())))?;
    let (matching, record) = bench::match_graph(algo, &graph, a.seed).map_err(|e| match e {
        bench::BenchError::Verification { .. } => Exit::Verification(e.to_string()),
        _ => Exit::Usage(e.to_string()),
    })?;
    let mut out = output(&a.out)?;
    rio::write_matching(&matching, &mut out)?;
    out.flush()?;
    eprintln!("{CSV_HEADER}");
    eprintln!("{}", record.to_csv());
    Ok(())
}

fn cmd_bvn(a: BvnArgs) -> Result<()> {
    let max_terms = match a.k.as_str() {
        "full" => None,
        k => Some(k.parse::<usize>().map_err(|_| usage(format!("--k must be a number or `full`, got {k:?}")))?),
    };
    let file = rio::read_matrix(input(&a.matrix)?).map_err(|e| usage(format!("{}: {e}", a.matrix.display())))?;
    let mut out = output(&a.out)?;
    let summary = match file {
        MatrixFile::Float { n, entries } => run_bvn(n, &entries, max_terms, a.seed, a.tolerance, &mut out)?,
        MatrixFile::Integer { n, entries } => run_bvn(n, &entries, max_terms, a.seed, 0.0, &mut out)?,
    };
    out.flush()?;
    eprintln!("{summary}");
    Ok(())
}

fn run_bvn<W: Weight + std::fmt::Display>(
    n: usize,
    entries: &[(usize, usize, W)],
    max_terms: Option<usize>,
    seed: u64,
    tolerance: f64,
    out: &mut dyn Write,
) -> Result<String> {
    let mut matrix = StochasticSupportMatrix::load(n, entries).map_err(|e| usage(e.to_string()))?;
    let mut rng = seeded(seed, Purpose::Walk);
    let decomposition = decompose(&mut matrix, max_terms, &mut rng).map_err(|e| Exit::Verification(e.to_string()))?;
    let error = reconstruction_error(entries, &decomposition, &matrix);
    if error > tolerance {
        bail!(Exit::Verification(format!("reconstruction error {error:e} exceeds {tolerance:e}")));
    }
    rio::write_decomposition(&decomposition, &mut *out)?;
    Ok(format!(
        "terms={} lambda_sum={} residual={:e} max_error={:e}",
        decomposition.terms.len(),
        decomposition.lambda_sum(),
        decomposition.residual,
        error
    ))
}

fn cmd_bench(a: BenchArgs) -> Result<()> {
    let algos: Vec<Algo> = a
        .algo
        .split(',')
        .map(|s| s.trim().parse())
        .collect::<Result<_, bench::BenchError>>()
        .map_err(|e| usage(e.to_string()))?;
    let sizes = bench::parse_sizes(&a.n).map_err(|e| usage(e.to_string()))?;
    let degrees = bench::parse_degrees(&a.d).map_err(|e| usage(e.to_string()))?;
    let cells = bench::expand_grid(&algos, &sizes, &degrees, a.seeds, a.seed);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(a.threads.unwrap_or(0)).build()?;
    let results: Vec<Result<BenchRecord, bench::BenchError>> =
        pool.install(|| cells.par_iter().map(|&c| bench::run_cell(c)).collect());
    let mut records = Vec::with_capacity(results.len());
    for r in results {
        match r {
            Ok(rec) => records.push(rec),
            Err(e @ bench::BenchError::Verification { .. }) => bail!(Exit::Verification(e.to_string())),
            Err(e) => bail!(Exit::Usage(e.to_string())),
        }
    }
    records.sort_by_key(|r| (r.algo, r.n, r.d, r.seed));

    let mut out = output(&a.out)?;
    writeln!(out, "{}", bench::metadata_line())?;
    writeln!(out, "{CSV_HEADER}")?;
    for r in &records {
        writeln!(out, "{}", r.to_csv())?;
    }
    out.flush()?;

    if a.check_bounds {
        let checks = bench::check_bounds(&records);
        for c in &checks {
            eprintln!("{c}");
        }
        let failed = checks.iter().filter(|c| !c.pass).count();
        if failed > 0 {
            bail!(Exit::Bound(format!("{failed} bound check(s) failed")));
        }
    }
    Ok(())
}

fn cmd_game(a: GameArgs) -> Result<()> {
    if a.d == 0 {
        return Err(usage("--d must be at least 1"));
    }
    let mut prober: Box<dyn Prober> = match a.prober {
        ProberKind::Scan => Box::new(ScanProber),
        ProberKind::Greedy => Box::new(GreedyAugmentProber::default()),
    };
    let report = run_game(prober.as_mut(), a.d).map_err(|e| Exit::Verification(e.to_string()))?;
    let mut out = output(&a.out)?;
    writeln!(out, "step,query,reply,mode,hidden")?;
    for (i, ans) in report.transcript.iter().enumerate() {
        writeln!(out, "{},{},{},{},{}", i + 1, ans.query, ans.reply, ans.mode.as_str(), ans.hidden)?;
    }
    out.flush()?;
    let need = (a.d * a.d) as u64;
    let probes = report.probes_to_hidden;
    eprintln!(
        "prober={} d={} probes_to_hidden={} total_probes={} evasive={} d_squared={need}",
        report.prober,
        a.d,
        probes.map_or("none".to_string(), |p| p.to_string()),
        report.total_probes,
        report.evasive_answers
    );
    if !report.is_consistent() {
        bail!(Exit::Verification("transcript inconsistent with the committed graph".into()));
    }
    if probes.is_some_and(|p| p < need) {
        bail!(Exit::Bound(format!("hidden edge found after {} probes, fewer than d^2 = {need}", probes.unwrap())));
    }
    Ok(())
}
