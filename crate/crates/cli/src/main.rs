use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;

use config::{GlobalFlags, RunConfig};

#[derive(Parser, Debug)]
#[command(
    name = "corank",
    version,
    about = "Corank and cokernel distributions of random matrices"
)]
struct Cli {
    /// key=value file; flags take precedence
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Working precision in bits (default from CORANK_PREC, else 256)
    #[arg(long, global = true)]
    prec: Option<u32>,
    /// Size of the worker pool for parallel subcommands
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output file (stdout if absent)
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Exact distribution of δ₀Pⁿ, or the distance to stationarity with --tv
    Chain(ChainArgs),
    /// Monte Carlo corank histogram against the exact law
    Simulate(SimulateArgs),
    /// Truncated spectrum against the exact eigenvalues
    Spectrum(SpectrumArgs),
    /// Leading-term residuals of the distance to stationarity
    Expansion(ExpansionArgs),
    /// Exact cokernel measures, the chain formula, and their expansion
    Cokernel(CokernelArgs),
    /// Smith normal form histogram of random p-adic matrices
    Snf(SnfArgs),
    /// Error series for p-parts of imaginary quadratic class groups
    Classgroup(ClassgroupArgs),
}

#[derive(Args, Debug)]
struct ChainArgs {
    /// uniform, symmetric, alt-odd, alt-even or hermitian
    #[arg(long)]
    kind: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    q: Option<String>,
    /// Column excess, uniform chain only
    #[arg(long, allow_hyphen_values = true)]
    m: Option<String>,
    #[arg(long)]
    n: Option<String>,
    /// Tabulate the distance to stationarity for 0..=n instead
    #[arg(long)]
    tv: bool,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// uniform, symmetric, alternating, hermitian or skew_centrosymmetric
    #[arg(long)]
    ensemble: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    m: Option<String>,
    /// Field order; Hermitian needs a square
    #[arg(long)]
    q: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    /// Largest acceptable distance; default 4·sqrt(K/trials)
    #[arg(long)]
    threshold: Option<String>,
}

#[derive(Args, Debug)]
struct SpectrumArgs {
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    q: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    m: Option<String>,
    /// Truncation order
    #[arg(long = "N", alias = "big-n")]
    big_n: Option<String>,
    /// Eigenvalues to report
    #[arg(long)]
    count: Option<String>,
}

#[derive(Args, Debug)]
struct ExpansionArgs {
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    q: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    m: Option<String>,
    /// Inclusive range of steps, e.g. 10..24
    #[arg(long)]
    n_range: Option<String>,
}

#[derive(Args, Debug)]
struct CokernelArgs {
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    m: Option<String>,
    /// Partition, e.g. 1 or 2,1
    #[arg(long = "type")]
    group: Option<String>,
    #[arg(long)]
    n_range: Option<String>,
    /// Add residual columns checked against the error cap
    #[arg(long)]
    validate: bool,
}

#[derive(Args, Debug)]
struct SnfArgs {
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    m: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    /// Entries are sampled modulo p^N
    #[arg(long = "N", alias = "big-n")]
    big_n: Option<String>,
    /// Tabulate types with log_p|G| up to this
    #[arg(long)]
    max_log: Option<String>,
}

#[derive(Args, Debug)]
struct ClassgroupArgs {
    #[arg(long)]
    p: Option<String>,
    #[arg(long = "type")]
    group: Option<String>,
    /// Discriminant bound |D| < X
    #[arg(long = "X", alias = "x")]
    x: Option<String>,
    #[arg(long)]
    checkpoints: Option<String>,
    /// Resumable store of computed p-parts
    #[arg(long)]
    cache: Option<String>,
    /// Also write a log-scale plot here
    #[arg(long)]
    svg: Option<String>,
}

fn flag(b: bool) -> Option<String> {
    b.then(|| "true".to_string())
}

type Keys = Vec<(&'static str, Option<String>, Option<&'static str>)>;

fn keys(cmd: Cmd) -> (&'static str, Keys) {
    match cmd {
        Cmd::Chain(a) => (
            "chain",
            vec![
                ("kind", a.kind, None),
                ("q", a.q, None),
                ("m", a.m, Some("0")),
                ("n", a.n, None),
                ("tv", flag(a.tv), None),
            ],
        ),
        Cmd::Simulate(a) => (
            "simulate",
            vec![
                ("ensemble", a.ensemble, None),
                ("n", a.n, None),
                ("m", a.m, Some("0")),
                ("q", a.q, None),
                ("trials", a.trials, Some("100000")),
                ("threshold", a.threshold, None),
            ],
        ),
        Cmd::Spectrum(a) => (
            "spectrum",
            vec![
                ("kind", a.kind, None),
                ("q", a.q, None),
                ("m", a.m, Some("0")),
                ("N", a.big_n, Some("60")),
                ("count", a.count, Some("12")),
            ],
        ),
        Cmd::Expansion(a) => (
            "expansion",
            vec![
                ("kind", a.kind, None),
                ("q", a.q, None),
                ("m", a.m, Some("0")),
                ("n-range", a.n_range, Some("1..20")),
            ],
        ),
        Cmd::Cokernel(a) => (
            "cokernel",
            vec![
                ("p", a.p, None),
                ("m", a.m, Some("0")),
                ("type", a.group, None),
                ("n-range", a.n_range, Some("1..8")),
                ("validate", flag(a.validate), None),
            ],
        ),
        Cmd::Snf(a) => (
            "snf",
            vec![
                ("p", a.p, None),
                ("n", a.n, None),
                ("m", a.m, Some("0")),
                ("trials", a.trials, Some("100000")),
                ("N", a.big_n, Some("12")),
                ("max-log", a.max_log, Some("3")),
            ],
        ),
        Cmd::Classgroup(a) => (
            "classgroup",
            vec![
                ("p", a.p, None),
                ("type", a.group, None),
                ("X", a.x, None),
                ("checkpoints", a.checkpoints, Some("100")),
                ("cache", a.cache, None),
                ("svg", a.svg, None),
            ],
        ),
    }
}

fn build_config(cli: Cli) -> corank::Result<RunConfig> {
    let file = match &cli.config {
        Some(path) => config::read_config_file(path)?,
        None => Default::default(),
    };
    let globals = GlobalFlags {
        seed: cli.seed,
        prec: cli.prec,
        workers: cli.workers,
        out: cli.out,
    };
    let (name, keys) = keys(cli.cmd);
    config::resolve(name, &keys, globals, file)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = build_config(cli).and_then(|cfg| {
        let workers = cfg.workers;
        corank::par::with_workers(workers, || commands::run(&cfg))
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_domain() { 2 } else { 1 })
        }
    }
}
