//! Command-line front end: subcommand dispatch, artifact files and benchmark tables.

pub mod artifact;
pub mod bench;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use gddp_core::gaussian::smoothing_parameter;
use gddp_core::gddp::{preprocess, query, verify_solution, SMOOTHING_TOL};
use gddp_core::io::{BasisFile, PreprocessingFile, SolutionFile, TargetFile};
use gddp_core::lab::{union_bound_experiment_with, Corpus, CorpusKind, DEFAULT_SIMULATED_N};
use gddp_core::lattice::{random_basis, Basis, BasisStyle};
use log::info;
use serde_json::json;

use crate::artifact::{read_payload, write_artifact, write_text, RunConfig};
use crate::bench::bench;

/// Sample count used when neither `--N` nor `--theorem-count` is given.
pub const DEFAULT_EMPIRICAL_N: usize = 1000;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "gddp", version, about = "Guaranteed distance decoding with preprocessing")]
struct Cli {
    /// Maximum lattice points per ball enumeration.
    #[arg(long, global = true, env = "GDDP_ENUM_CAP")]
    enum_cap: Option<usize>,
    /// Maximum sphere probe points for epsilon-net certification.
    #[arg(long, global = true, env = "GDDP_PROBE_CAP")]
    probe_cap: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a random basis.
    Gen(GenArgs),
    /// Estimate the smoothing parameter of a basis.
    Eta(EtaArgs),
    /// Draw the preprocessing list for a basis.
    Preprocess(PreprocessArgs),
    /// Draw a target uniformly from the fundamental cell of the reduced basis.
    Target(TargetArgs),
    /// Decode a target with a preprocessing list.
    Query(QueryArgs),
    /// Check a solution: exact lattice membership and distance.
    Verify(VerifyArgs),
    /// Distance/time trade-off table.
    Bench(BenchArgs),
    /// Run the inequality corpus.
    Lemmas(LemmasArgs),
    /// Union-bound miniature over an epsilon-net.
    Union(UnionArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Style {
    Uniform,
    Knapsack,
    ScaledIdentity,
}

#[derive(Args, Debug)]
struct StyleArgs {
    #[arg(long, value_enum, default_value = "uniform")]
    style: Style,
    /// Entry bound for the uniform style.
    #[arg(long, default_value_t = 10)]
    bound: i64,
    /// Modulus bit length for the knapsack style.
    #[arg(long, default_value_t = 16)]
    bits: u32,
    /// Scale for the scaled-identity style.
    #[arg(long, default_value_t = 1)]
    scale: i64,
}

impl StyleArgs {
    fn style(&self) -> BasisStyle {
        match self.style {
            Style::Uniform => BasisStyle::UniformInteger { bound: self.bound },
            Style::Knapsack => BasisStyle::Knapsack { modulus_bits: self.bits },
            Style::ScaledIdentity => BasisStyle::ScaledIdentity { scale: self.scale },
        }
    }
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    #[command(flatten)]
    style: StyleArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "-")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EtaArgs {
    #[arg(long)]
    basis: PathBuf,
    #[arg(long, default_value_t = SMOOTHING_TOL)]
    tol: f64,
    #[arg(long, default_value = "-")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct PreprocessArgs {
    #[arg(long)]
    basis: PathBuf,
    #[arg(long)]
    alpha: f64,
    /// List size; below N_alpha the distance guarantee is void.
    #[arg(long = "N", conflicts_with = "theorem_count")]
    count: Option<usize>,
    /// Use N = N_alpha, the count the distance guarantee requires.
    #[arg(long)]
    theorem_count: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "-")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct TargetArgs {
    #[arg(long)]
    basis: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "-")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct QueryArgs {
    #[arg(long)]
    prep: PathBuf,
    #[arg(long)]
    target: PathBuf,
    /// Write the step-by-step trace here.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long, default_value = "-")]
    out: PathBuf,
}

#[derive(Args, Debug)]
#[command(group = clap::ArgGroup::new("lattice").required(true).args(["prep", "basis"]))]
struct VerifyArgs {
    /// Preprocessing file; supplies the basis and the default `d`.
    #[arg(long)]
    prep: Option<PathBuf>,
    #[arg(long, requires = "d")]
    basis: Option<PathBuf>,
    #[arg(long)]
    target: PathBuf,
    #[arg(long)]
    solution: PathBuf,
    #[arg(long)]
    d: Option<f64>,
    #[arg(long, default_value = "-")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Basis file; otherwise one is generated from `--n` and the style flags.
    #[arg(long, conflicts_with = "n")]
    basis: Option<PathBuf>,
    #[arg(long, required_unless_present = "basis")]
    n: Option<usize>,
    #[command(flatten)]
    style: StyleArgs,
    #[arg(long, value_delimiter = ',', default_value = "0.5")]
    alphas: Vec<f64>,
    #[arg(long = "N", value_delimiter = ',', default_value = "0,100,1000")]
    counts: Vec<usize>,
    #[arg(long, default_value_t = 50)]
    targets: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Emit the table as JSON.
    #[arg(long)]
    json: bool,
    #[arg(long, default_value = "-")]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CorpusArg {
    Standard,
    Quick,
}

#[derive(Args, Debug)]
struct LemmasArgs {
    #[arg(long, value_enum, default_value = "standard")]
    corpus: CorpusArg,
    #[arg(long, default_value = "-")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct UnionArgs {
    /// Basis file; defaults to the integer lattice of dimension `--n`.
    #[arg(long, conflicts_with = "n")]
    basis: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    n: usize,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_SIMULATED_N)]
    simulated_n: usize,
    #[arg(long, default_value = "-")]
    out: PathBuf,
}

/// Parses `argv` (program name first), runs the subcommand and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    if let Some(cap) = cli.enum_cap {
        gddp_core::limits::set_enumeration_cap(cap);
    }
    if let Some(cap) = cli.probe_cap {
        gddp_core::limits::set_probe_cap(cap);
    }
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_FAIL
        }
    }
}

fn dispatch(command: Command) -> Result<i32> {
    match command {
        Command::Gen(a) => cmd_gen(a),
        Command::Eta(a) => cmd_eta(a),
        Command::Preprocess(a) => cmd_preprocess(a),
        Command::Target(a) => cmd_target(a),
        Command::Query(a) => cmd_query(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Lemmas(a) => cmd_lemmas(a),
        Command::Union(a) => cmd_union(a),
    }
}

fn load_basis(path: &Path, inputs: &mut BTreeMap<String, String>) -> Result<Basis> {
    let file: BasisFile = read_payload(path, inputs, "basis")?;
    Ok(file.to_basis()?)
}

fn cmd_gen(a: GenArgs) -> Result<i32> {
    let basis = random_basis(a.n, &a.style.style(), a.seed)?;
    write_artifact(&a.out, "basis", &RunConfig::new(Some(a.seed)), BTreeMap::new(), BasisFile::from(&basis))?;
    Ok(EXIT_OK)
}

fn cmd_eta(a: EtaArgs) -> Result<i32> {
    let mut inputs = BTreeMap::new();
    let basis = load_basis(&a.basis, &mut inputs)?;
    let est = smoothing_parameter(&basis, a.tol)?;
    let config = RunConfig::new(None).tolerance("smoothing", a.tol);
    write_artifact(&a.out, "smoothing", &config, inputs, json!({ "basis_hash": basis.hash(), "smoothing": est }))?;
    Ok(EXIT_OK)
}

fn cmd_preprocess(a: PreprocessArgs) -> Result<i32> {
    let mut inputs = BTreeMap::new();
    let basis = load_basis(&a.basis, &mut inputs)?;
    let count = if a.theorem_count { None } else { Some(a.count.unwrap_or(DEFAULT_EMPIRICAL_N)) };
    let prep = preprocess(&basis, a.alpha, count, a.seed)?;
    if !prep.theorem_guarantee() {
        eprintln!(
            "theorem guarantee void: N = {} is below N_alpha = {}; results are empirical",
            prep.params.count,
            prep.n_alpha.as_ref().map_or("?".to_string(), |na| na.value.to_string())
        );
    }
    let config = RunConfig::new(Some(a.seed)).tolerance("smoothing", SMOOTHING_TOL);
    write_artifact(&a.out, "preprocessing", &config, inputs, PreprocessingFile::from(&prep))?;
    Ok(EXIT_OK)
}

fn cmd_target(a: TargetArgs) -> Result<i32> {
    let mut inputs = BTreeMap::new();
    let basis = load_basis(&a.basis, &mut inputs)?;
    let t = bench::bench_targets(&basis, 1, a.seed).remove(0);
    write_artifact(&a.out, "target", &RunConfig::new(Some(a.seed)), inputs, TargetFile::new(&t))?;
    Ok(EXIT_OK)
}

fn cmd_query(a: QueryArgs) -> Result<i32> {
    let mut inputs = BTreeMap::new();
    let prep: PreprocessingFile = read_payload(&a.prep, &mut inputs, "preprocessing")?;
    let prep = prep.to_preprocessing()?;
    let target: TargetFile = read_payload(&a.target, &mut inputs, "target")?;
    let sol = query(&prep, &target.to_target()?)?;
    info!("decoded in {} steps, distance {}", sol.trace.steps.len(), sol.distance);
    let config = RunConfig::new(prep.vectors.seed.into());
    if let Some(path) = &a.trace {
        write_artifact(path, "trace", &config, inputs.clone(), &sol.trace)?;
    }
    write_artifact(&a.out, "solution", &config, inputs, SolutionFile::from(&sol))?;
    Ok(EXIT_OK)
}

fn cmd_verify(a: VerifyArgs) -> Result<i32> {
    let mut inputs = BTreeMap::new();
    let (basis, prep_d) = match (&a.prep, &a.basis) {
        (Some(p), _) => {
            let prep: PreprocessingFile = read_payload(p, &mut inputs, "preprocessing")?;
            (prep.basis.to_basis()?, Some(prep.params.d))
        }
        (None, Some(b)) => (load_basis(b, &mut inputs)?, None),
        (None, None) => bail!("one of --prep or --basis is required"),
    };
    let Some(d) = a.d.or(prep_d) else { bail!("--d is required with --basis") };
    let target: TargetFile = read_payload(&a.target, &mut inputs, "target")?;
    let sol: SolutionFile = read_payload(&a.solution, &mut inputs, "solution")?;
    let verdict = verify_solution(&basis, &target.to_target()?, &sol.y, d)?;
    write_artifact(&a.out, "verdict", &RunConfig::new(None), inputs, &verdict)?;
    eprintln!(
        "{}: member = {}, distance = {} (d = {})",
        if verdict.pass { "PASS" } else { "FAIL" },
        verdict.member,
        verdict.distance,
        d
    );
    Ok(if verdict.pass { EXIT_OK } else { EXIT_FAIL })
}

fn cmd_bench(a: BenchArgs) -> Result<i32> {
    let mut inputs = BTreeMap::new();
    let basis = match (&a.basis, a.n) {
        (Some(p), _) => load_basis(p, &mut inputs)?,
        (None, Some(n)) => random_basis(n, &a.style.style(), a.seed)?,
        (None, None) => bail!("one of --basis or --n is required"),
    };
    let table = bench(&basis, &a.alphas, &a.counts, a.targets, a.seed)?;
    eprintln!("theorem guarantee void: benchmark list sizes are empirical");
    if a.json {
        write_artifact(&a.out, "bench", &RunConfig::new(Some(a.seed)), inputs, &table)?;
    } else {
        write_text(&a.out, &table.render())?;
    }
    Ok(EXIT_OK)
}

fn cmd_lemmas(a: LemmasArgs) -> Result<i32> {
    let kind = match a.corpus {
        CorpusArg::Standard => CorpusKind::Standard,
        CorpusArg::Quick => CorpusKind::Quick,
    };
    let reports = Corpus::new(kind)?.run_all()?;
    let failed = reports.iter().filter(|r| !r.pass).count();
    let mut config = RunConfig::new(None);
    config.tolerances.insert("smoothing".into(), SMOOTHING_TOL);
    write_artifact(&a.out, "lemmas", &config, BTreeMap::new(), &reports)?;
    eprintln!("{} checks, {} failed", reports.len(), failed);
    Ok(if failed == 0 { EXIT_OK } else { EXIT_FAIL })
}

fn cmd_union(a: UnionArgs) -> Result<i32> {
    let mut inputs = BTreeMap::new();
    let basis = match &a.basis {
        Some(p) => load_basis(p, &mut inputs)?,
        None => Basis::identity(a.n),
    };
    let report = union_bound_experiment_with(&basis, a.alpha, a.seed, a.simulated_n)
        .with_context(|| format!("union-bound experiment at n = {}", basis.n()))?;
    let pass = report.chain.pass && report.n_required.is_some();
    write_artifact(&a.out, "union-bound", &RunConfig::new(Some(a.seed)), inputs, &report)?;
    eprintln!(
        "{}: min p = {:e} (certified >= {:e}), chain bound {:e}, N required {}",
        if pass { "PASS" } else { "FAIL" },
        report.min_p,
        report.min_p_lo,
        report.chain_bound,
        report.n_required.map_or("none".to_string(), |v| format!("{v:e}"))
    );
    Ok(if pass { EXIT_OK } else { EXIT_FAIL })
}
