use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use perfect_core::expectation::{expected_counts, EXPECTED_CSV_HEADER};
use perfect_core::graph::generate_optional_pairs;
use perfect_core::io::{er_metadata, read_graph, read_optional_pairs, write_er_graph, write_graph, write_optional_pairs};
use perfect_core::solve::{RowMeta, RESULT_CSV_HEADER};
use perfect_core::{
    find_odd_antiholes, find_odd_holes, generate_er, run_heuristic, solve_instance, ErParams, Graph,
    HeuristicMode, HeuristicOutcome, Instance, ProblemKind, SolveStatus, StrategyConfig, Termination,
    VertexPair,
};

const EXIT_TIMELIMIT: u8 = 3;

#[derive(Parser)]
#[command(name = "perfect", version, about = "Perfect-graph editing, completion, deletion and sandwich solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an Erdős–Rényi graph G(n, p).
    Gen(GenArgs),
    /// Solve one instance, or every line of a manifest.
    Solve(SolveArgs),
    /// Run the flip heuristic and report one CSV row per graph.
    Heuristic(HeuristicArgs),
    /// Tabulate expected odd hole and antihole counts.
    Expected(ExpectedArgs),
    /// List the odd holes and antiholes of a graph.
    FindHoles(FindHolesArgs),
}

#[derive(Args)]
struct GenArgs {
    n: usize,
    p: f64,
    seed: u64,
    /// Graph file to write; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also sample optional pairs: each non-edge kept with this probability.
    #[arg(long, requires = "optional_out")]
    optional_density: Option<f64>,
    #[arg(long, requires = "optional_density")]
    optional_out: Option<PathBuf>,
}

#[derive(Args)]
struct StrategyArgs {
    /// Named strategy `base|hc|hr|hcr|addall`, optionally `:<termination>`.
    #[arg(long, default_value = "base")]
    strategy: String,
    /// Structures found per candidate: `one`, a fraction in (0,1) of the
    /// expected count, or `all`.
    #[arg(long)]
    ohtp: Option<Termination>,
    /// Run the heuristic on imperfect candidates.
    #[arg(long)]
    heur_candidates: bool,
    /// Run the heuristic every k-th node (default 10).
    #[arg(long, num_args = 0..=1, default_missing_value = "10", value_name = "K")]
    heur_nodes: Option<u64>,
    /// Seed the pool with every structure of the input.
    #[arg(long)]
    add_all: bool,
    /// Time limit in seconds.
    #[arg(long, default_value_t = 900.0)]
    time_limit: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl StrategyArgs {
    fn config(&self, base: &str) -> Result<StrategyConfig> {
        let mut cfg = StrategyConfig::parse(base).with_context(|| format!("--strategy {base:?}"))?;
        if let Some(t) = self.ohtp {
            cfg.termination = t;
        }
        cfg.heuristic_on_candidates |= self.heur_candidates;
        if let Some(k) = self.heur_nodes {
            if k == 0 {
                bail!("--heur-nodes interval must be positive");
            }
            cfg.heuristic_on_nodes = true;
            cfg.node_interval = k;
        }
        cfg.add_all_initial |= self.add_all;
        if !(self.time_limit.is_finite() && self.time_limit >= 0.0) {
            bail!("--time-limit must be a non-negative number of seconds");
        }
        cfg.time_limit = Some(Duration::from_secs_f64(self.time_limit));
        cfg.seed = self.seed;
        Ok(cfg)
    }
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long, required_unless_present = "manifest")]
    problem: Option<ProblemKind>,
    #[arg(long, required_unless_present = "manifest", conflicts_with = "manifest")]
    input: Option<PathBuf>,
    /// Optional-pair file (sandwich only).
    #[arg(long, conflicts_with = "manifest")]
    optional: Option<PathBuf>,
    /// Lines `<graph-path> <problem> <strategy-string> <optional-path-or-dash>`.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Worker threads for manifest runs.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[command(flatten)]
    strategy: StrategyArgs,
    /// Result CSV to append to; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the output graph here (single instance only).
    #[arg(long, conflicts_with = "manifest")]
    graph_out: Option<PathBuf>,
    /// Report zero times so that reruns produce identical bytes.
    #[arg(long)]
    omit_times: bool,
}

#[derive(Args)]
struct HeuristicArgs {
    /// Graph files; when absent, ER graphs are generated from --n/--p/--seeds.
    #[arg(long, num_args = 1..)]
    input: Vec<PathBuf>,
    #[arg(long, required_unless_present = "input")]
    n: Option<usize>,
    #[arg(long, value_delimiter = ',', required_unless_present = "input")]
    p: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4")]
    seeds: Vec<u64>,
    /// Restrict flips to additions.
    #[arg(long)]
    additions_only: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    omit_times: bool,
}

#[derive(Args)]
struct ExpectedArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    n_list: Vec<usize>,
    /// Explicit probabilities.
    #[arg(long, value_delimiter = ',', conflicts_with = "p_steps")]
    p_grid: Vec<f64>,
    /// Uniform grid `k/steps` for `k = 0..=steps`.
    #[arg(long)]
    p_steps: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FindHolesArgs {
    input: PathBuf,
    /// Stop after this many holes and this many antiholes.
    #[arg(long)]
    limit: Option<usize>,
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_graph(path: &Path) -> Result<(Graph, String)> {
    let text = read_text(path)?;
    let g = read_graph(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok((g, text))
}

fn load_optional(path: &Path, n: usize) -> Result<Vec<VertexPair>> {
    let (m, pairs) = read_optional_pairs(&read_text(path)?).with_context(|| format!("parsing {}", path.display()))?;
    if m != n {
        bail!("{}: optional pairs are over {m} vertices, the graph has {n}", path.display());
    }
    Ok(pairs)
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Appends rows to `out` (writing the header into a new or empty file), or
/// prints header and rows.
fn emit_csv(out: Option<&Path>, header: &str, rows: &[String]) -> Result<()> {
    let mut text = String::new();
    let fresh = match out {
        Some(p) => fs::metadata(p).map(|m| m.len() == 0).unwrap_or(true),
        None => true,
    };
    if fresh {
        text.push_str(header);
        text.push('\n');
    }
    for r in rows {
        text.push_str(r);
        text.push('\n');
    }
    match out {
        Some(path) => {
            let mut f = fs::OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)
                .with_context(|| format!("opening {}", path.display()))?;
            f.write_all(text.as_bytes()).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn gen(args: &GenArgs) -> Result<ExitCode> {
    if !(0.0..=1.0).contains(&args.p) {
        bail!("p = {} outside [0, 1]", args.p);
    }
    let params = ErParams::new(args.n, args.p, args.seed);
    let g = generate_er(params);
    write_or_print(args.out.as_deref(), &write_er_graph(&g, &params))?;
    if let (Some(d), Some(path)) = (args.optional_density, &args.optional_out) {
        if !(0.0..=1.0).contains(&d) {
            bail!("--optional-density {d} outside [0, 1]");
        }
        let pairs = generate_optional_pairs(&g, d, args.seed);
        write_or_print(Some(path), &write_optional_pairs(g.n(), &pairs))?;
    }
    Ok(ExitCode::SUCCESS)
}

struct Job {
    input: PathBuf,
    problem: ProblemKind,
    strategy: String,
    optional: Option<PathBuf>,
}

fn parse_manifest(path: &Path) -> Result<Vec<Job>> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut jobs = Vec::new();
    for (i, line) in read_text(path)?.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 4 {
            bail!("{}:{}: expected `<graph> <problem> <strategy> <optional|->`", path.display(), i + 1);
        }
        let resolve = |s: &str| {
            let p = PathBuf::from(s);
            if p.is_absolute() { p } else { dir.join(p) }
        };
        jobs.push(Job {
            input: resolve(f[0]),
            problem: f[1].parse().with_context(|| format!("{}:{}", path.display(), i + 1))?,
            strategy: f[2].to_string(),
            optional: (f[3] != "-").then(|| resolve(f[3])),
        });
    }
    Ok(jobs)
}

struct Outcome {
    row: String,
    status: SolveStatus,
    output: Option<Graph>,
}

fn run_job(job: &Job, strategy: &StrategyArgs, omit_times: bool) -> Result<Outcome> {
    let (g, text) = load_graph(&job.input)?;
    let cfg = strategy.config(&job.strategy)?;
    let instance = match (&job.optional, job.problem) {
        (Some(path), ProblemKind::Sandwich) => Instance::sandwich(g.clone(), load_optional(path, g.n())?),
        (Some(_), kind) => bail!("--optional is only valid with --problem sandwich, not {kind}"),
        (None, kind) => Instance::new(kind, g.clone()),
    };
    let result = solve_instance(&instance, &cfg).with_context(|| job.input.display().to_string())?;
    let (p, seed) = er_metadata(&text).unwrap_or((g.density(), cfg.seed));
    let meta = RowMeta { n: g.n(), p, seed };
    Ok(Outcome {
        row: result.csv_row(&meta, &cfg.label(), omit_times),
        status: result.status,
        output: result.output,
    })
}

fn solve(args: &SolveArgs) -> Result<ExitCode> {
    let jobs = match &args.manifest {
        Some(m) => parse_manifest(m)?,
        None => vec![Job {
            input: args.input.clone().expect("clap enforces --input"),
            problem: args.problem.expect("clap enforces --problem"),
            strategy: args.strategy.strategy.clone(),
            optional: args.optional.clone(),
        }],
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.max(1))
        .build()
        .context("starting worker threads")?;
    let slots: Vec<Mutex<Option<Result<Outcome>>>> = jobs.iter().map(|_| Mutex::new(None)).collect();
    pool.install(|| {
        jobs.par_iter().zip(&slots).for_each(|(job, slot)| {
            *slot.lock().unwrap() = Some(run_job(job, &args.strategy, args.omit_times));
        })
    });
    let mut rows = Vec::with_capacity(jobs.len());
    let mut timed_out = false;
    for slot in slots {
        let outcome = slot.into_inner().unwrap().expect("every job ran")?;
        timed_out |= outcome.status == SolveStatus::TimeLimit;
        if let (Some(path), Some(g)) = (&args.graph_out, &outcome.output) {
            write_or_print(Some(path), &write_graph(g))?;
        }
        rows.push(outcome.row);
    }
    emit_csv(args.out.as_deref(), RESULT_CSV_HEADER, &rows)?;
    Ok(if timed_out { ExitCode::from(EXIT_TIMELIMIT) } else { ExitCode::SUCCESS })
}

const HEURISTIC_CSV_HEADER: &str = "n,p,seed,status,objective,iterations,time_s";

fn heuristic(args: &HeuristicArgs) -> Result<ExitCode> {
    let mut graphs: Vec<(Graph, f64, u64)> = Vec::new();
    for path in &args.input {
        let (g, text) = load_graph(path)?;
        let (p, seed) = er_metadata(&text).unwrap_or((g.density(), 0));
        graphs.push((g, p, seed));
    }
    if args.input.is_empty() {
        let n = args.n.expect("clap enforces --n");
        for &p in &args.p {
            if !(0.0..=1.0).contains(&p) {
                bail!("--p {p} outside [0, 1]");
            }
            for &seed in &args.seeds {
                graphs.push((generate_er(ErParams::new(n, p, seed)), p, seed));
            }
        }
    }
    let mode = if args.additions_only { HeuristicMode::AdditionsOnly } else { HeuristicMode::EditBothWays };
    let mut rows = Vec::new();
    for (g, p, seed) in graphs {
        let start = Instant::now();
        let run = run_heuristic(&g, mode);
        let time = start.elapsed().as_secs_f64();
        let (status, objective, iterations) = match &run.outcome {
            HeuristicOutcome::Perfect { graph, flips } => ("perfect", graph.hamming_distance(&g).to_string(), flips.len()),
            HeuristicOutcome::Failed { .. } => ("failed", String::new(), 0),
        };
        let time = if args.omit_times { "0".to_string() } else { format!("{time:.6}") };
        rows.push(format!("{},{},{},{},{},{},{}", g.n(), p, seed, status, objective, iterations, time));
    }
    emit_csv(args.out.as_deref(), HEURISTIC_CSV_HEADER, &rows)?;
    Ok(ExitCode::SUCCESS)
}

fn expected(args: &ExpectedArgs) -> Result<ExitCode> {
    let grid: Vec<f64> = match args.p_steps {
        Some(0) => bail!("--p-steps must be positive"),
        Some(k) => (0..=k).map(|t| t as f64 / k as f64).collect(),
        None if args.p_grid.is_empty() => bail!("one of --p-grid or --p-steps is required"),
        None => args.p_grid.clone(),
    };
    let mut rows = Vec::new();
    for &n in &args.n_list {
        for &p in &grid {
            rows.push(expected_counts(n, p).with_context(|| format!("n={n} p={p}"))?.csv_row());
        }
    }
    let mut text = format!("{EXPECTED_CSV_HEADER}\n");
    for r in rows {
        text.push_str(&r);
        text.push('\n');
    }
    write_or_print(args.out.as_deref(), &text)?;
    Ok(ExitCode::SUCCESS)
}

fn find_holes(args: &FindHolesArgs) -> Result<ExitCode> {
    let (g, _) = load_graph(&args.input)?;
    let mut text = String::new();
    for h in find_odd_holes(&g, args.limit).iter().chain(&find_odd_antiholes(&g, args.limit)) {
        text.push_str(&h.to_string());
        text.push('\n');
    }
    print!("{text}");
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Gen(a) => gen(a),
        Command::Solve(a) => solve(a),
        Command::Heuristic(a) => heuristic(a),
        Command::Expected(a) => expected(a),
        Command::FindHoles(a) => find_holes(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
