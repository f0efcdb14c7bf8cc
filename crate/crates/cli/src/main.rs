mod bench;

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ripple_core::oracle::DEFAULT_HON_CAP;
use ripple_core::{exact_count_vector, run_with_seeds, select_seeds, validate_eps};
use ripple_core::{Error, Graph, Report, RunConfig, SeedSet, Stratification};

/// Estimates connected induced subgraph counts with stratified random-walk tours.
#[derive(Parser, Debug)]
#[command(name = "ripple", version)]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate CIS counts of order k.
    Count(CountArgs),
    /// Count exactly by enumeration.
    Exact(ExactArgs),
    /// Check that the seeded stratification keeps every stratum connected.
    Validate(ValidateArgs),
    /// Run a sweep of configurations and write one CSV row per run.
    Bench(BenchArgs),
}

#[derive(Args, Debug)]
struct GraphArgs {
    /// Edge list, one `u v` pair per line.
    #[arg(long)]
    graph: PathBuf,
    /// Vertex labels, one integer per line in order of first appearance.
    #[arg(long)]
    labels: Option<PathBuf>,
}

impl GraphArgs {
    fn load(&self) -> Result<Graph, Error> {
        Graph::load_edge_list(&self.graph, self.labels.as_deref())
    }
}

#[derive(Args, Debug)]
struct OutputArgs {
    /// Output file; stdout when absent.
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug)]
struct CountArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, default_value_t = 0.01)]
    epsilon: f64,
    /// Number of seed states.
    #[arg(long, default_value_t = 16)]
    n1: usize,
    /// Capacity of each reservoir cell.
    #[arg(long = "reservoir", default_value_t = 100_000)]
    reservoir: usize,
    #[arg(long, env = "RIPPLE_WORKERS", default_value_t = 1)]
    workers: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 256)]
    min_tours: u64,
    #[arg(long, default_value_t = 10_000_000)]
    max_tours: u64,
    #[arg(long, default_value_t = 1_000_000)]
    max_steps: u64,
    /// Use these seed states instead of selecting them.
    #[arg(long)]
    seeds_in: Option<PathBuf>,
    /// Write the seed states used to this file.
    #[arg(long)]
    seeds_out: Option<PathBuf>,
    /// Include wall time in the JSON output.
    #[arg(long)]
    wall_time: bool,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args, Debug)]
struct ExactArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long)]
    k: usize,
    /// Stop after enumerating this many subgraphs.
    #[arg(long, default_value_t = ripple_core::oracle::DEFAULT_CIS_CAP)]
    cap: usize,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 16)]
    n1: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    seeds_in: Option<PathBuf>,
    /// Stop after building this many higher-order states.
    #[arg(long, default_value_t = DEFAULT_HON_CAP)]
    cap: usize,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// JSON list of sweep entries.
    #[arg(long)]
    sweep: PathBuf,
    /// Largest enumeration attempted for the exact reference.
    #[arg(long, default_value_t = ripple_core::oracle::DEFAULT_CIS_CAP)]
    oracle_cap: usize,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_)
        | Error::OrderTooSmall(_)
        | Error::OrderTooLarge { .. }
        | Error::Overlap { .. } => 2,
        Error::CapExceeded { .. } | Error::AttemptBudget(_) => 3,
        _ => 1,
    }
}

fn sink(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(io::stdout().lock()),
    })
}

fn emit(report: &Report, out: &OutputArgs) -> Result<(), Error> {
    let mut w = sink(out.output.as_deref())?;
    match out.format {
        Format::Json => writeln!(w, "{}", report.to_json()?)?,
        Format::Csv => report.write_csv(&mut w)?,
    }
    Ok(w.flush()?)
}

fn cmd_count(args: &CountArgs) -> Result<u8, Error> {
    let cfg = RunConfig {
        k: args.k,
        epsilon: args.epsilon,
        n1: args.n1,
        reservoir_capacity: args.reservoir,
        min_tours: args.min_tours,
        max_tours: args.max_tours,
        max_steps: args.max_steps,
        workers: args.workers,
        rng_seed: args.seed,
        batch: None,
    };
    cfg.validate()?;
    let g = args.graph.load()?;
    log::info!("graph: {} vertices, {} edges", g.n(), g.edge_count());
    // same stream as engine::run, so a saved seed file reproduces the run
    let seeds = match &args.seeds_in {
        Some(p) => SeedSet::load(p)?,
        None => select_seeds(
            &g,
            cfg.n1,
            cfg.k,
            &mut ChaCha8Rng::seed_from_u64(cfg.rng_seed),
        )?,
    };
    if let Some(p) = &args.seeds_out {
        std::fs::write(p, seeds.to_json()?)?;
    }
    let result = run_with_seeds(&g, &cfg, &seeds)?;
    for w in &result.warnings {
        log::warn!("{w}");
    }
    emit(&Report::from_estimate(&result, args.wall_time), &args.out)?;
    let tours: u64 = result.per_stratum.iter().map(|s| s.tours).sum();
    eprintln!(
        "total {:.6e}  strata {}  tours {}  wall {:.3} s",
        result.total, result.strata_used, tours, result.wall_time_secs
    );
    Ok(0)
}

fn cmd_exact(args: &ExactArgs) -> Result<u8, Error> {
    let g = args.graph.load()?;
    let exact = exact_count_vector(&g, args.k, args.cap)?;
    emit(&Report::from_exact(&exact), &args.out)?;
    Ok(0)
}

fn cmd_validate(args: &ValidateArgs) -> Result<u8, Error> {
    if args.k < 3 {
        return Err(Error::OrderTooSmall(args.k));
    }
    let g = args.graph.load()?;
    let seeds = match &args.seeds_in {
        Some(p) => SeedSet::load(p)?,
        None => select_seeds(
            &g,
            args.n1,
            args.k,
            &mut ChaCha8Rng::seed_from_u64(args.seed),
        )?,
    };
    let strat = Stratification::new(&g, &seeds)?;
    let report = validate_eps(&g, &strat, args.k, args.cap)?;
    let mut w = sink(args.output.as_deref())?;
    writeln!(w, "{}", serde_json::to_string_pretty(&report)?)?;
    w.flush()?;
    if report.is_valid() {
        Ok(0)
    } else {
        eprintln!("{} violation(s)", report.violations.len());
        Ok(1)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .init();
    let outcome = match &cli.command {
        Command::Count(a) => cmd_count(a),
        Command::Exact(a) => cmd_exact(a),
        Command::Validate(a) => cmd_validate(a),
        Command::Bench(a) => bench::cmd_bench(&a.sweep, a.oracle_cap, a.output.as_deref()),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
