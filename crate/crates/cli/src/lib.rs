//! Command-line front end for the `llmpcc` solver.
//!
//! Exit codes: 0 when the run certified (or, for `generate` and `bench`,
//! when every output was produced), 1 on a solver-level failure, 2 on
//! usage or I/O errors.

pub mod report;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use llmpcc::baseline::{pgm_solve, PgmOptions};
use llmpcc::generators::{bound_qpcc_start, gen_bound_qpcc, kth3, rng_from_seed, uniform_point, BoundQpccSpec};
use llmpcc::homotopy::{certify, solve, HomotopyParams, SolveStatus, StationarityLabel};
use llmpcc::io::ProblemFile;
use llmpcc::model::{quadratic_to_mpcc, QuadraticMpcc};

use report::{write_rows, write_trace, ReportRow};

pub const EXIT_OK: i32 = 0;
pub const EXIT_SOLVER: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Half-width of the box random starting points are drawn from.
pub const START_HALF_WIDTH: f64 = 50.0;

#[derive(Debug, Parser)]
#[command(name = "llmpcc", version, about = "Lasry-Lions homotopy solver for MPCCs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a random bound-constrained quadratic MPCC.
    Generate(GenerateArgs),
    /// Solve a problem file and print one report row.
    Solve(SolveArgs),
    /// Run a benchmark suite and write a report.
    Bench(BenchArgs),
    /// Print the stationarity certificate of a point.
    Certify(CertifyArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub n0: usize,
    #[arg(long)]
    pub p: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Tolerance; values near 1e-8 sit at the edge of double precision.
    #[arg(long, default_value_t = 1e-8)]
    pub eps: f64,
    #[arg(long, default_value_t = 0.999)]
    pub beta: f64,
    #[arg(long, default_value_t = 0.8)]
    pub rho: f64,
    #[arg(long, default_value_t = 1.0)]
    pub lambda0: f64,
    #[arg(long, default_value_t = 200)]
    pub max_outer: usize,
}

impl SolverArgs {
    pub fn params(&self) -> HomotopyParams {
        HomotopyParams {
            epsilon: self.eps,
            beta: self.beta,
            lambda0: self.lambda0,
            rho: self.rho,
            max_outer: self.max_outer,
            ..Default::default()
        }
    }
}

/// Starting point selection for `solve`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StartSpec {
    Zeros,
    /// Finite lower bounds, zero elsewhere.
    Lower,
    /// Uniform in `[-50, 50]` per coordinate from the given seed.
    Random(u64),
}

impl FromStr for StartSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "zeros" => Ok(StartSpec::Zeros),
            "lower" => Ok(StartSpec::Lower),
            _ => match s.strip_prefix("random:") {
                Some(seed) => seed.parse().map(StartSpec::Random).map_err(|e| format!("bad seed {seed:?}: {e}")),
                None => Err(format!("expected zeros, lower or random:<seed>, got {s:?}")),
            },
        }
    }
}

impl StartSpec {
    pub fn point(&self, q: &QuadraticMpcc) -> Vec<f64> {
        match self {
            StartSpec::Zeros => vec![0.0; q.dim()],
            StartSpec::Lower => bound_qpcc_start(q),
            StartSpec::Random(seed) => uniform_point(&mut rng_from_seed(*seed), q.dim(), START_HALF_WIDTH),
        }
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub problem: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, default_value = "lower")]
    pub x0: StartSpec,
    #[arg(long)]
    pub skip_stage1: bool,
    /// Per-iteration CSV trace.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// JSON with the final point, `lambda`, `beta`, `eps` and `label`.
    #[arg(long)]
    pub solution: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Kth3,
    BoundQpcc,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_enum)]
    pub suite: Suite,
    /// Comma-separated `n0xp` sizes for bound-qpcc.
    #[arg(long, default_value = "20x40")]
    pub sizes: String,
    /// Comma-separated seeds or a range `a..b`.
    #[arg(long, default_value = "0")]
    pub seeds: String,
    /// Starting points per instance. For bound-qpcc the first run starts from
    /// `(l0, 0, 0)` without stage one and later runs from random points.
    #[arg(long, default_value_t = 1)]
    pub runs: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[arg(long)]
    pub problem: PathBuf,
    /// JSON array, or `@path` to read it from a file.
    #[arg(long)]
    pub point: String,
    #[arg(long)]
    pub lambda: f64,
    #[arg(long, default_value_t = 0.999)]
    pub beta: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub eps: f64,
}

/// Solution file written by `solve --solution`.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct SolutionFile {
    pub x: Vec<f64>,
    pub lambda: f64,
    pub beta: f64,
    pub eps: f64,
    pub status: SolveStatus,
    pub label: StationarityLabel,
}

/// Parse `args` (including the program name) and run the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    let result = match cli.command {
        Command::Generate(a) => cmd_generate(&a),
        Command::Solve(a) => cmd_solve(&a, out),
        Command::Bench(a) => cmd_bench(&a, out, err),
        Command::Certify(a) => cmd_certify(&a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            EXIT_USAGE
        }
    }
}

fn read_problem(path: &Path) -> anyhow::Result<ProblemFile> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    ProblemFile::from_json(&text).with_context(|| format!("cannot parse {}", path.display()))
}

pub fn cmd_generate(args: &GenerateArgs) -> anyhow::Result<i32> {
    if args.n0 + args.p == 0 {
        bail!("--n0 and --p cannot both be zero");
    }
    let file = ProblemFile::generated(BoundQpccSpec { n0: args.n0, p: args.p, seed: args.seed });
    fs::write(&args.out, file.to_json()).with_context(|| format!("cannot write {}", args.out.display()))?;
    Ok(EXIT_OK)
}

pub fn cmd_solve(args: &SolveArgs, out: &mut dyn Write) -> anyhow::Result<i32> {
    let file = read_problem(&args.problem)?;
    let q = file.to_problem()?;
    let problem = quadratic_to_mpcc(&q)?;
    let mut params = args.solver.params();
    params.f_lower = q.lower_bound();
    params.validate()?;
    let x0 = args.x0.point(&q);

    let start = Instant::now();
    let report = solve(&problem, &params, &x0, args.skip_stage1)?;
    let time_ms = start.elapsed().as_secs_f64() * 1e3;

    let name = file.name.clone().unwrap_or_else(|| args.problem.display().to_string());
    let row = ReportRow::from_solve(
        &name,
        file.seed.unwrap_or(0),
        &problem,
        &report,
        file.constant.unwrap_or(0.0),
        time_ms,
    );
    if let Some(path) = &args.trace {
        let f = fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
        write_trace(f, &report.trace)?;
    }
    if let Some(path) = &args.solution {
        let sol = SolutionFile {
            x: report.x_final.clone(),
            lambda: report.final_lambda().unwrap_or(params.lambda0),
            beta: params.beta,
            eps: params.epsilon,
            status: report.status,
            label: report.certificate.label,
        };
        fs::write(path, serde_json::to_string(&sol)? + "\n").with_context(|| format!("cannot write {}", path.display()))?;
    }
    write_rows(&mut *out, &[row])?;
    Ok(if report.status == SolveStatus::CertifiedStationary { EXIT_OK } else { EXIT_SOLVER })
}

pub fn cmd_certify(args: &CertifyArgs, out: &mut dyn Write) -> anyhow::Result<i32> {
    let q = read_problem(&args.problem)?.to_problem()?;
    let problem = quadratic_to_mpcc(&q)?;
    let text = match args.point.strip_prefix('@') {
        Some(path) => fs::read_to_string(path).with_context(|| format!("cannot read {path}"))?,
        None => args.point.clone(),
    };
    let x: Vec<f64> = serde_json::from_str(&text).context("--point must be a JSON array of numbers")?;
    if x.len() != problem.dim() {
        bail!("point has {} entries but the problem has {} variables", x.len(), problem.dim());
    }
    let cert = certify(&problem, &x, args.lambda, args.beta, args.eps)?;
    writeln!(out, "{}", serde_json::to_string_pretty(&cert)?)?;
    Ok(if cert.label == StationarityLabel::None { EXIT_SOLVER } else { EXIT_OK })
}

/// Parse `"3"`, `"0,2,5"` or `"0..10"`.
pub fn parse_seeds(s: &str) -> anyhow::Result<Vec<u64>> {
    if let Some((a, b)) = s.split_once("..") {
        let (a, b): (u64, u64) = (a.trim().parse()?, b.trim().parse()?);
        if a >= b {
            bail!("empty seed range {s:?}");
        }
        return Ok((a..b).collect());
    }
    s.split(',').map(|t| t.trim().parse().map_err(|e| anyhow!("bad seed {t:?}: {e}"))).collect()
}

/// Parse `"20x40,100x200"` into `(n0, p)` pairs.
pub fn parse_sizes(s: &str) -> anyhow::Result<Vec<(usize, usize)>> {
    s.split(',')
        .map(|t| {
            let (a, b) = t.trim().split_once('x').ok_or_else(|| anyhow!("size {t:?} is not of the form n0xp"))?;
            Ok((a.parse()?, b.parse()?))
        })
        .collect()
}

#[derive(Debug, Clone)]
enum Task {
    Kth3 { seed: u64, x0: Vec<f64> },
    Homotopy { spec: BoundQpccSpec, x0: Option<Vec<f64>> },
    Pgm { spec: BoundQpccSpec, x0: Option<Vec<f64>> },
}

fn bench_tasks(args: &BenchArgs) -> anyhow::Result<Vec<Task>> {
    let seeds = parse_seeds(&args.seeds)?;
    let mut tasks = Vec::new();
    match args.suite {
        Suite::Kth3 => {
            for &seed in &seeds {
                let mut rng = rng_from_seed(seed);
                for _ in 0..args.runs {
                    tasks.push(Task::Kth3 { seed, x0: uniform_point(&mut rng, 2, START_HALF_WIDTH) });
                }
            }
        }
        Suite::BoundQpcc => {
            for (n0, p) in parse_sizes(&args.sizes)? {
                if n0 + p == 0 {
                    bail!("size 0x0 has no variables");
                }
                for &seed in &seeds {
                    let spec = BoundQpccSpec { n0, p, seed };
                    let mut rng = rng_from_seed(seed);
                    for run in 0..args.runs {
                        let x0 = (run > 0).then(|| uniform_point(&mut rng, spec.dim(), START_HALF_WIDTH));
                        tasks.push(Task::Homotopy { spec, x0: x0.clone() });
                        tasks.push(Task::Pgm { spec, x0 });
                    }
                }
            }
        }
    }
    Ok(tasks)
}

fn run_task(task: &Task, params: &HomotopyParams) -> anyhow::Result<ReportRow> {
    let start = Instant::now();
    let elapsed = || start.elapsed().as_secs_f64() * 1e3;
    match task {
        Task::Kth3 { seed, x0 } => {
            let problem = kth3();
            let report = solve(&problem, params, x0, false)?;
            Ok(ReportRow::from_solve("kth3", *seed, &problem, &report, 0.0, elapsed()))
        }
        Task::Homotopy { spec, x0 } => {
            let q = gen_bound_qpcc(*spec);
            let problem = quadratic_to_mpcc(&q)?;
            let params = HomotopyParams { f_lower: q.lower_bound(), ..params.clone() };
            let report = match x0 {
                None => solve(&problem, &params, &bound_qpcc_start(&q), true)?,
                Some(x) => solve(&problem, &params, x, false)?,
            };
            Ok(ReportRow::from_solve(&instance_name(spec), spec.seed, &problem, &report, 0.0, elapsed()))
        }
        Task::Pgm { spec, x0 } => {
            let q = gen_bound_qpcc(*spec);
            let problem = quadratic_to_mpcc(&q)?;
            let start_point = x0.clone().unwrap_or_else(|| bound_qpcc_start(&q));
            let opts = PgmOptions { epsilon: params.epsilon, ..Default::default() };
            let res = pgm_solve(&q, &start_point, &opts)?;
            Ok(ReportRow::from_pgm(&format!("{}/pgm", instance_name(spec)), spec.seed, &problem, &res, elapsed()))
        }
    }
}

fn instance_name(spec: &BoundQpccSpec) -> String {
    format!("bound-qpcc-n0{}-p{}", spec.n0, spec.p)
}

pub fn cmd_bench(args: &BenchArgs, out: &mut dyn Write, err: &mut dyn Write) -> anyhow::Result<i32> {
    let params = args.solver.params();
    params.validate()?;
    let tasks = bench_tasks(args)?;
    let slots: Vec<Mutex<Option<anyhow::Result<ReportRow>>>> = tasks.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = args.jobs.clamp(1, tasks.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(task) = tasks.get(i) else { break };
                let row = run_task(task, &params);
                *slots[i].lock().expect("no worker panics while holding a slot") = Some(row);
            });
        }
    });

    let mut rows = Vec::with_capacity(tasks.len());
    for slot in slots {
        let row = slot.into_inner().expect("workers have finished").expect("every task ran")?;
        rows.push(row);
    }
    match &args.out {
        Some(path) => {
            let f = fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
            write_rows(f, &rows)?;
        }
        None => write_rows(&mut *out, &rows)?,
    }
    let certified = rows.iter().filter(|r| r.status == SolveStatus::CertifiedStationary.as_str()).count();
    let homotopy_rows = rows.iter().filter(|r| !r.status.starts_with("Pgm")).count();
    writeln!(err, "{} rows, {certified}/{homotopy_rows} homotopy runs certified", rows.len())?;
    Ok(EXIT_OK)
}
