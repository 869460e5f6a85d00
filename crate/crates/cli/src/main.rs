//! `cocktail`: solve, certify, benchmark and generate D-optimal design problems.
//!
//! Exit status: 0 converged (or certified), 1 input error, 2 iteration cap or
//! time budget reached, 3 certificate failure.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use cocktail_core::{
    certify, load_csv, run_benchmark, solve, Algorithm, BenchmarkSpec, DesignResult, DesignSpace,
    InitStrategy, ResultDocument, SolverConfig, SpaceFamily, TerminationStatus, WeightsDocument,
};

const EXIT_OK: u8 = 0;
const EXIT_INPUT: u8 = 1;
const EXIT_CAP: u8 = 2;
const EXIT_CERTIFICATE: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "cocktail", version, about = "D-optimal approximate designs on finite design spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute a D-optimal design.
    Solve(SolveArgs),
    /// Check a stored design against the equivalence-theorem bound.
    Certify(CertifyArgs),
    /// Run the benchmark grid and print median time (iterations) per cell.
    Bench(BenchArgs),
    /// Write a builtin design space to CSV.
    Gen(GenArgs),
}

/// `x1`..`x4`, or `csv:<path>`.
#[derive(Clone, Debug)]
enum SpaceArg {
    Builtin(SpaceFamily),
    Csv(PathBuf),
}

impl FromStr for SpaceArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.strip_prefix("csv:") {
            Some(path) if !path.is_empty() => Ok(Self::Csv(path.into())),
            Some(_) => Err("csv: needs a file path".into()),
            None => s.parse().map(Self::Builtin),
        }
    }
}

#[derive(Args, Debug)]
struct SpaceOpts {
    /// Design space: x1, x2, x3, x4 or csv:<path>.
    #[arg(long)]
    space: SpaceArg,
    /// Grid size n (side length k for x4).
    #[arg(long)]
    n: Option<usize>,
    /// The CSV file starts with a header row.
    #[arg(long)]
    has_header: bool,
}

impl SpaceOpts {
    fn load(&self) -> Result<DesignSpace> {
        match &self.space {
            SpaceArg::Builtin(family) => {
                let n = self.n.with_context(|| format!("--n is required for builtin space {family}"))?;
                Ok(family.build(n)?)
            }
            SpaceArg::Csv(path) => {
                if self.n.is_some() {
                    bail!("--n applies only to builtin spaces");
                }
                load_csv(path, self.has_header).with_context(|| format!("loading {}", path.display()))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, clap::ValueEnum)]
enum InitArg {
    Uniform,
    Random,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    space: SpaceOpts,
    #[arg(long, default_value = "cocktail")]
    algorithm: Algorithm,
    #[arg(long, default_value_t = 1e-6)]
    epsilon: f64,
    #[arg(long, default_value_t = 10_000)]
    max_iter: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Starting design (default: uniform for ma, random support otherwise).
    #[arg(long, value_enum)]
    init: Option<InitArg>,
    /// Size of the random starting support (default min(2m, n)).
    #[arg(long)]
    support_target: Option<usize>,
    /// Wall-clock budget in seconds for the iteration loop.
    #[arg(long)]
    time_budget: Option<f64>,
    /// Result JSON path; the trace goes next to it as <stem>.trace.csv.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Explicit trace CSV path.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CertifyArgs {
    #[command(flatten)]
    space: SpaceOpts,
    /// Design JSON, as written by `solve --out`.
    #[arg(long)]
    weights: PathBuf,
    #[arg(long, default_value_t = 1e-6)]
    epsilon: f64,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Family and sizes, e.g. x1:20,50,100 (repeatable).
    #[arg(long = "space", required = true, value_parser = parse_bench_space)]
    spaces: Vec<(SpaceFamily, Vec<usize>)>,
    /// Comma-separated algorithms.
    #[arg(long, default_value = "ma,vem,cocktail")]
    algorithms: String,
    #[arg(long, default_value_t = 3)]
    replications: usize,
    #[arg(long, default_value_t = 1e-6)]
    epsilon: f64,
    #[arg(long, default_value_t = 0)]
    seed_base: u64,
    #[arg(long, default_value_t = 10_000)]
    max_iter: usize,
    /// Per-run time budget in seconds; runs past it are marked aborted.
    #[arg(long)]
    cell_budget: Option<f64>,
    /// Worker threads (0 = one per core).
    #[arg(long, env = "COCKTAIL_WORKERS", default_value_t = 0)]
    workers: usize,
    /// Write the table as CSV here.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Write the aligned text table here instead of standard output.
    #[arg(long)]
    text: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GenArgs {
    /// Builtin family: x1, x2, x3 or x4.
    #[arg(long)]
    space: SpaceFamily,
    /// Grid size n (side length k for x4).
    #[arg(long)]
    n: usize,
    /// Output path (standard output if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write a header row.
    #[arg(long)]
    header: bool,
}

fn parse_bench_space(s: &str) -> Result<(SpaceFamily, Vec<usize>), String> {
    let (family, sizes) = s.split_once(':').ok_or_else(|| format!("expected <family>:<sizes>, got {s:?}"))?;
    let family: SpaceFamily = family.parse()?;
    let sizes = sizes
        .split(',')
        .map(|v| v.trim().parse::<usize>().map_err(|e| format!("bad size {v:?}: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((family, sizes))
}

fn parse_algorithms(list: &str) -> Result<Vec<Algorithm>> {
    let algorithms = list
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<Algorithm>().map_err(anyhow::Error::msg))
        .collect::<Result<Vec<_>>>()?;
    if algorithms.is_empty() {
        bail!("--algorithms needs at least one of ma, vem, cocktail");
    }
    Ok(algorithms)
}

fn seconds(value: Option<f64>, flag: &str) -> Result<Option<Duration>> {
    value
        .map(|s| Duration::try_from_secs_f64(s).with_context(|| format!("{flag} must be a nonnegative number of seconds")))
        .transpose()
}

fn trace_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map_or_else(|| "design".into(), |s| s.to_string_lossy().into_owned());
    out.with_file_name(format!("{stem}.trace.csv"))
}

fn print_design(space: &DesignSpace, res: &DesignResult) {
    println!("{:>8}  {:>12}  point", "index", "weight");
    for sp in &res.support {
        let label = space.label(sp.index).map_or_else(
            || {
                let coords: Vec<String> = sp.point.iter().map(|v| format!("{v:.6}")).collect();
                coords.join(" ")
            },
            str::to_owned,
        );
        println!("{:>8}  {:>12.8}  {label}", sp.index, sp.weight);
    }
    println!("status       {}", res.status());
    println!("iterations   {}", res.iterations());
    println!("support      {}", res.support.len());
    println!("log det      {:.12}", res.log_det);
    println!("max d/m      {:.12}", res.certificate);
    println!("seconds      {:.4}", res.trace.seconds());
}

fn cmd_solve(args: SolveArgs) -> Result<u8> {
    let space = args.space.load()?;
    let mut config = SolverConfig::new(args.algorithm)
        .with_seed(args.seed)
        .with_epsilon(args.epsilon)
        .with_max_iterations(args.max_iter);
    if let Some(init) = args.init {
        config = config.with_init(match init {
            InitArg::Uniform => InitStrategy::UniformAll,
            InitArg::Random => InitStrategy::RandomSupport,
        });
    }
    config.support_target = args.support_target;
    config.time_budget = seconds(args.time_budget, "--time-budget")?;
    let res = solve(&space, &config)?;
    print_design(&space, &res);
    if let Some(out) = &args.out {
        ResultDocument::from_result(&res, space.dim())
            .save(out)
            .with_context(|| format!("writing {}", out.display()))?;
    }
    if let Some(path) = args.trace.clone().or_else(|| args.out.as_deref().map(trace_path)) {
        let file = File::create(&path).with_context(|| format!("writing {}", path.display()))?;
        res.trace.write_csv(BufWriter::new(file))?;
    }
    Ok(match res.status() {
        TerminationStatus::Converged => EXIT_OK,
        TerminationStatus::IterationCap | TerminationStatus::TimeBudget => EXIT_CAP,
    })
}

fn cmd_certify(args: CertifyArgs) -> Result<u8> {
    let space = args.space.load()?;
    let doc = WeightsDocument::load(&args.weights).with_context(|| format!("reading {}", args.weights.display()))?;
    if doc.n != space.len() {
        bail!("weights file has n = {} but the space has {} points", doc.n, space.len());
    }
    let rep = certify(&space, &doc.dense()?)?;
    println!("log det      {:.12}", rep.log_det);
    println!("max d/m      {:.12} (index {})", rep.max_ratio, rep.argmax);
    let ok = rep.is_optimal(args.epsilon);
    println!("optimal      {} (epsilon {:e})", if ok { "yes" } else { "no" }, args.epsilon);
    Ok(if ok { EXIT_OK } else { EXIT_CERTIFICATE })
}

fn cmd_bench(args: BenchArgs) -> Result<u8> {
    let mut spec = BenchmarkSpec::new(args.spaces, parse_algorithms(&args.algorithms)?);
    spec.replications = args.replications;
    spec.epsilon = args.epsilon;
    spec.seed_base = args.seed_base;
    spec.max_iterations = args.max_iter;
    spec.cell_budget = seconds(args.cell_budget, "--cell-budget")?;
    let table = run_benchmark(&spec, args.workers)?;
    if let Some(path) = &args.csv {
        let file = File::create(path).with_context(|| format!("writing {}", path.display()))?;
        table.write_csv(BufWriter::new(file))?;
    }
    let text = table.render_text();
    match &args.text {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(EXIT_OK)
}

fn cmd_gen(args: GenArgs) -> Result<u8> {
    let space = args.space.build(args.n)?;
    match &args.out {
        Some(path) => space.save_csv(path, args.header).with_context(|| format!("writing {}", path.display()))?,
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            space.write_csv(&mut lock, args.header)?;
            lock.flush()?;
        }
    }
    Ok(EXIT_OK)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT } else { EXIT_OK });
        }
    };
    let outcome = match cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Certify(a) => cmd_certify(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Gen(a) => cmd_gen(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}
