//! Command implementations behind the `swarmalloc` binary.
//!
//! Each `cmd_*` function computes its whole result in memory and returns it; the
//! binary renders and writes it only once everything succeeded, so a failing
//! command never leaves a partial output file behind.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use swarmalloc::{
    allocate, brute_force, fit_usl, penalized_score, sweep, AllocationRecord, AllocatorConfig64,
    FitResult64, OracleConfig, TaskSet64, TaskSetFile, TaskSpec,
};
use swarmalloc_sim::{
    estimate_individual_accuracy, generate_environment, run_batch, summarize, AccuracyEstimate,
    Controller, CurvePoint, ExperimentConfig, Geometry, MotionParams, RunRecord, SimError,
    DEFAULT_MAX_TIMESTEPS,
};

/// Relative score difference under which greedy and oracle count as matching.
pub const MATCH_TOLERANCE: f64 = swarmalloc::oracle::TIE_TOLERANCE;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("resource cap: {0}")]
    Cap(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Schema(_) => 2,
            CliError::Precondition(_) => 3,
            CliError::Cap(_) => 4,
        }
    }
}

impl From<swarmalloc::Error> for CliError {
    fn from(e: swarmalloc::Error) -> Self {
        use swarmalloc::Error as E;
        match e {
            E::CapExceeded { .. } | E::Overflow(_) => CliError::Cap(e.to_string()),
            E::InvalidCurve { .. } | E::EmptyTaskSet => CliError::Schema(e.to_string()),
            _ => CliError::Precondition(e.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        CliError::Precondition(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "swarmalloc", version, about = "Swarm task allocation, simulation and USL fitting")]
pub struct Cli {
    /// Write the result here instead of standard output.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimal allocation of N agents to a task set.
    Allocate(AllocateArgs),
    /// Allocations over a range of swarm sizes.
    Sweep(SweepArgs),
    /// Compare the greedy allocation with exhaustive enumeration.
    Oracle(OracleArgs),
    /// Sample each task's scalability curve for n = 1..n_max.
    Curves(CurvesArgs),
    /// Run a batch of collective decision experiments.
    Simulate(SimulateArgs),
    /// Measure individual accuracy p of non-interfering robots.
    EstimateP(EstimateArgs),
    /// Fit a USL curve to `n,performance` CSV data.
    Fit(FitArgs),
    /// Print an arena as a 36-line bitmap ('#' black, '.' white).
    Environment(EnvironmentArgs),
}

#[derive(Debug, Args)]
pub struct AllocateArgs {
    /// Task set JSON file.
    #[arg(long)]
    pub tasks: PathBuf,
    #[arg(short = 'N', long)]
    pub agents: usize,
    /// Overrides the file's epsilon.
    #[arg(long)]
    pub epsilon: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub tasks: PathBuf,
    #[arg(long = "from")]
    pub n_min: usize,
    #[arg(long = "to")]
    pub n_max: usize,
    #[arg(long, default_value_t = 1)]
    pub step: usize,
    #[arg(long)]
    pub epsilon: Option<f64>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub tasks: PathBuf,
    #[arg(short = 'N', long)]
    pub agents: usize,
    /// Largest number of candidate allocations to enumerate.
    #[arg(long, default_value_t = OracleConfig::default().cap)]
    pub cap: u128,
    #[arg(long)]
    pub epsilon: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CurvesArgs {
    #[arg(long)]
    pub tasks: PathBuf,
    #[arg(long)]
    pub n_max: usize,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Experiment config JSON; excludes the per-field flags below.
    #[arg(long, conflicts_with_all = ["geometry", "f", "controller", "n", "n_list", "reps", "interference", "max_timesteps"])]
    pub config: Option<PathBuf>,
    #[arg(long, required_unless_present = "config")]
    pub geometry: Option<Geometry>,
    #[arg(long, required_unless_present = "config")]
    pub f: Option<f64>,
    #[arg(long)]
    pub controller: Option<Controller>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Comma-separated swarm sizes.
    #[arg(long, value_delimiter = ',')]
    pub n_list: Option<Vec<usize>>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub interference: bool,
    #[arg(long)]
    pub max_timesteps: Option<u64>,
    #[command(flatten)]
    pub motion: MotionFlags,
    /// Master seed; overrides the config file's.
    #[arg(long, required_unless_present = "config")]
    pub seed: Option<u64>,
}

#[derive(Debug, Args, Default)]
pub struct MotionFlags {
    /// Per-step heading noise in degrees.
    #[arg(long)]
    pub heading_noise: Option<f64>,
    /// Half aperture of the robot detection cones in degrees.
    #[arg(long)]
    pub sensor_aperture: Option<f64>,
}

impl MotionFlags {
    fn apply(&self, mut motion: MotionParams) -> MotionParams {
        if let Some(x) = self.heading_noise {
            motion.heading_noise_deg = x;
        }
        if let Some(x) = self.sensor_aperture {
            motion.sensor_half_aperture_deg = x;
        }
        motion
    }
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub geometry: Geometry,
    #[arg(long)]
    pub f: f64,
    #[arg(long, default_value_t = 250)]
    pub reps: usize,
    #[arg(long, default_value_t = 20)]
    pub robots: usize,
    #[command(flatten)]
    pub motion: MotionFlags,
    #[arg(long)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// CSV with header `n,performance`.
    #[arg(long)]
    pub input: PathBuf,
}

#[derive(Debug, Args)]
pub struct EnvironmentArgs {
    #[arg(long)]
    pub geometry: Geometry,
    #[arg(long)]
    pub f: f64,
    #[arg(long)]
    pub seed: u64,
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Schema(format!("cannot read {}: {e}", path.display())))
}

/// Parsed and validated task set file.
#[derive(Debug, Clone)]
pub struct LoadedTasks {
    pub file: TaskSetFile,
    pub tasks: TaskSet64,
    pub config: AllocatorConfig64,
}

impl LoadedTasks {
    pub fn from_file(file: TaskSetFile) -> Result<Self> {
        let schema = |e: swarmalloc::Error| CliError::Schema(e.to_string());
        let tasks = file.task_set().map_err(schema)?;
        let config = file.config().map_err(schema)?;
        Ok(LoadedTasks { file, tasks, config })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let file: TaskSetFile = serde_json::from_str(text).map_err(|e| CliError::Schema(e.to_string()))?;
        Self::from_file(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_text(path)?)
    }

    fn with_epsilon(&self, epsilon: Option<f64>) -> Result<AllocatorConfig64> {
        match epsilon {
            Some(e) => Ok(AllocatorConfig64::new(e)?),
            None => Ok(self.config),
        }
    }
}

pub fn cmd_allocate(tasks: &LoadedTasks, agents: usize, epsilon: Option<f64>) -> Result<AllocationRecord> {
    let config = tasks.with_epsilon(epsilon)?;
    Ok(AllocationRecord::from(&allocate(agents, &tasks.tasks, &config)?))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepLine {
    #[serde(flatten)]
    pub allocation: AllocationRecord,
    pub proportions: Vec<f64>,
    pub idle_proportion: f64,
}

pub fn cmd_sweep(
    tasks: &LoadedTasks,
    n_min: usize,
    n_max: usize,
    step: usize,
    epsilon: Option<f64>,
) -> Result<Vec<SweepLine>> {
    if step == 0 {
        return Err(CliError::Precondition("step must be positive".into()));
    }
    if n_min > n_max {
        return Err(CliError::Precondition(format!("empty range {n_min}..{n_max}")));
    }
    let config = tasks.with_epsilon(epsilon)?;
    let sizes: Vec<usize> = (n_min..=n_max).step_by(step).collect();
    Ok(sweep(&sizes, &tasks.tasks, &config)?
        .into_iter()
        .map(|row| SweepLine {
            allocation: AllocationRecord::from(&row.allocation),
            proportions: row.proportions,
            idle_proportion: row.idle_proportion,
        })
        .collect())
}

pub fn sweep_csv(lines: &[SweepLine], task_count: usize) -> Result<String> {
    let mut header = vec!["N".to_string()];
    header.extend((1..=task_count).map(|i| format!("n_{i}")));
    header.push("idle".into());
    header.extend((1..=task_count).map(|i| format!("prop_{i}")));
    header.push("performance".into());
    let mut rows = Vec::with_capacity(lines.len());
    for l in lines {
        let a = &l.allocation;
        let mut row = vec![a.agents.to_string()];
        row.extend(a.counts.iter().map(|c| c.to_string()));
        row.push(a.idle.to_string());
        row.extend(l.proportions.iter().map(|p| p.to_string()));
        row.push(a.performance.to_string());
        rows.push(row);
    }
    write_csv(&header, &rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub greedy: AllocationRecord,
    pub oracle_best: AllocationRecord,
    pub tie_set_size: u128,
    #[serde(rename = "match")]
    pub matches: bool,
    pub greedy_score: f64,
    pub oracle_score: f64,
    pub enumerated: u128,
}

pub fn cmd_oracle(tasks: &LoadedTasks, agents: usize, cap: u128, epsilon: Option<f64>) -> Result<OracleReport> {
    let config = tasks.with_epsilon(epsilon)?;
    let greedy = allocate(agents, &tasks.tasks, &config)?;
    let oracle = brute_force(agents, &tasks.tasks, &config, &OracleConfig { cap })?;
    let greedy_score = penalized_score(&tasks.tasks, &greedy.counts, config.epsilon)?;
    let matches = (greedy_score - oracle.best_score).abs() <= MATCH_TOLERANCE * oracle.best_score.abs();
    Ok(OracleReport {
        greedy: AllocationRecord::from(&greedy),
        oracle_best: AllocationRecord::from(&oracle.best),
        tie_set_size: oracle.tie_count,
        matches,
        greedy_score,
        oracle_score: oracle.best_score,
        enumerated: oracle.enumerated,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveSamples {
    pub task: TaskSpec,
    /// `C(d, n)` for `n = 1..=n_max`.
    pub values: Vec<f64>,
}

pub fn cmd_curves(tasks: &LoadedTasks, n_max: usize) -> Result<Vec<CurveSamples>> {
    if n_max == 0 {
        return Err(CliError::Precondition("n_max must be at least 1".into()));
    }
    tasks
        .tasks
        .curves()
        .iter()
        .map(|c| {
            let values = (1..=n_max).map(|n| c.evaluate(n)).collect::<swarmalloc::Result<Vec<_>>>()?;
            Ok(CurveSamples {
                task: TaskSpec::from_curve(c),
                values,
            })
        })
        .collect()
}

pub fn curves_csv(samples: &[CurveSamples]) -> Result<String> {
    let mut header = vec!["n".to_string()];
    header.extend((1..=samples.len()).map(|i| format!("task_{i}")));
    let n_max = samples.first().map_or(0, |s| s.values.len());
    let rows: Vec<Vec<String>> = (0..n_max)
        .map(|i| {
            let mut row = vec![(i + 1).to_string()];
            row.extend(samples.iter().map(|s| s.values[i].to_string()));
            row
        })
        .collect();
    write_csv(&header, &rows)
}

/// Builds the experiment config from either a config file or the individual flags.
pub fn simulate_config(args: &SimulateArgs) -> Result<ExperimentConfig> {
    let mut config = match &args.config {
        Some(path) => {
            serde_json::from_str::<ExperimentConfig>(&read_text(path)?).map_err(|e| CliError::Schema(e.to_string()))?
        }
        None => {
            let (geometry, f, seed) = match (args.geometry, args.f, args.seed) {
                (Some(g), Some(f), Some(s)) => (g, f, s),
                _ => return Err(CliError::Precondition("--geometry, --f and --seed are required".into())),
            };
            ExperimentConfig {
                geometry,
                f,
                controller: args.controller.unwrap_or(Controller::Centralized),
                n: args.n,
                n_list: args.n_list.clone(),
                repetitions: args.reps.unwrap_or(250),
                interference: args.interference,
                master_seed: seed,
                max_timesteps: args.max_timesteps.unwrap_or(DEFAULT_MAX_TIMESTEPS),
                motion: MotionParams::default(),
            }
        }
    };
    if let Some(seed) = args.seed {
        config.master_seed = seed;
    }
    config.motion = args.motion.apply(config.motion);
    Ok(config)
}

/// Runs every size of `config` in turn, reporting progress on standard error.
pub fn cmd_simulate(config: &ExperimentConfig, progress: bool) -> Result<Vec<RunRecord>> {
    let sizes = config.sizes()?;
    let mut records = Vec::new();
    for (i, &n) in sizes.iter().enumerate() {
        if progress {
            eprintln!("simulate: n = {n} ({}/{}), {} runs", i + 1, sizes.len(), config.repetitions);
        }
        let single = ExperimentConfig {
            n: None,
            n_list: Some(vec![n]),
            ..config.clone()
        };
        records.extend(run_batch(&single)?);
    }
    Ok(records)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub config: ExperimentConfig,
    pub curve: Vec<CurvePoint>,
    pub runs: Vec<RunRecord>,
}

pub fn records_csv(records: &[RunRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(r).map_err(|e| CliError::Precondition(e.to_string()))?;
    }
    finish_csv(w)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    pub geometry: Geometry,
    pub f: f64,
    pub repetitions: usize,
    pub robots_per_run: usize,
    #[serde(flatten)]
    pub estimate: AccuracyEstimate,
}

pub fn cmd_estimate_p(args: &EstimateArgs, progress: bool) -> Result<EstimateReport> {
    if progress {
        eprintln!(
            "estimate-p: {} runs of {} robots on {} f = {}",
            args.reps, args.robots, args.geometry, args.f
        );
    }
    let motion = args.motion.apply(MotionParams::default());
    let estimate = estimate_individual_accuracy(args.geometry, args.f, args.reps, args.robots, args.seed, &motion)?;
    Ok(EstimateReport {
        geometry: args.geometry,
        f: args.f,
        repetitions: args.reps,
        robots_per_run: args.robots,
        estimate,
    })
}

#[derive(Debug, serde::Deserialize)]
struct PointRow {
    n: usize,
    performance: f64,
}

/// Parses `n,performance` CSV text.
pub fn parse_points(text: &str) -> Result<Vec<(usize, f64)>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut points = Vec::new();
    for (i, row) in reader.deserialize::<PointRow>().enumerate() {
        let row = row.map_err(|e| CliError::Schema(format!("row {}: {e}", i + 1)))?;
        if !row.performance.is_finite() {
            return Err(CliError::Schema(format!("row {}: performance is not finite", i + 1)));
        }
        points.push((row.n, row.performance));
    }
    Ok(points)
}

pub fn cmd_fit(points: &[(usize, f64)]) -> Result<FitResult64> {
    Ok(fit_usl(points)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvironmentReport {
    pub geometry: Geometry,
    pub f: f64,
    pub seed: u64,
    pub white_count: usize,
    pub majority_white: bool,
    /// Top row first.
    pub rows: Vec<String>,
}

pub fn cmd_environment(geometry: Geometry, f: f64, seed: u64) -> Result<EnvironmentReport> {
    let env = generate_environment(geometry, f, seed)?;
    Ok(EnvironmentReport {
        geometry,
        f,
        seed,
        white_count: env.white_count(),
        majority_white: env.majority_white(),
        rows: env.to_bitmap().lines().map(str::to_string).collect(),
    })
}

fn write_csv(header: &[String], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Precondition(e.to_string());
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    finish_csv(w)
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| CliError::Precondition(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Precondition(e.to_string()))
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Precondition(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Rendered command output plus the exit code it should produce.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rendered {
    pub body: String,
    pub exit_code: u8,
}

impl Rendered {
    fn ok(body: String) -> Self {
        Rendered { body, exit_code: 0 }
    }
}

fn only_json(format: Option<Format>, command: &str) -> Result<()> {
    match format {
        Some(Format::Csv) => Err(CliError::Precondition(format!("{command} has no CSV output"))),
        _ => Ok(()),
    }
}

/// Runs the parsed command and renders its output.
pub fn execute(cli: &Cli, progress: bool) -> Result<Rendered> {
    let format = cli.format;
    match &cli.command {
        Command::Allocate(a) => {
            only_json(format, "allocate")?;
            let tasks = LoadedTasks::load(&a.tasks)?;
            Ok(Rendered::ok(to_json(&cmd_allocate(&tasks, a.agents, a.epsilon)?)?))
        }
        Command::Sweep(a) => {
            let tasks = LoadedTasks::load(&a.tasks)?;
            let lines = cmd_sweep(&tasks, a.n_min, a.n_max, a.step, a.epsilon)?;
            Ok(Rendered::ok(match format.unwrap_or(Format::Csv) {
                Format::Csv => sweep_csv(&lines, tasks.tasks.len())?,
                Format::Json => to_json(&lines)?,
            }))
        }
        Command::Oracle(a) => {
            only_json(format, "oracle")?;
            let tasks = LoadedTasks::load(&a.tasks)?;
            let report = cmd_oracle(&tasks, a.agents, a.cap, a.epsilon)?;
            Ok(Rendered {
                exit_code: if report.matches { 0 } else { 1 },
                body: to_json(&report)?,
            })
        }
        Command::Curves(a) => {
            let tasks = LoadedTasks::load(&a.tasks)?;
            let samples = cmd_curves(&tasks, a.n_max)?;
            Ok(Rendered::ok(match format.unwrap_or(Format::Csv) {
                Format::Csv => curves_csv(&samples)?,
                Format::Json => to_json(&samples)?,
            }))
        }
        Command::Simulate(a) => {
            let config = simulate_config(a)?;
            let records = cmd_simulate(&config, progress)?;
            Ok(Rendered::ok(match format.unwrap_or(Format::Csv) {
                Format::Csv => records_csv(&records)?,
                Format::Json => to_json(&SimulationReport {
                    curve: summarize(&records),
                    config,
                    runs: records,
                })?,
            }))
        }
        Command::EstimateP(a) => {
            only_json(format, "estimate-p")?;
            Ok(Rendered::ok(to_json(&cmd_estimate_p(a, progress)?)?))
        }
        Command::Fit(a) => {
            only_json(format, "fit")?;
            let points = parse_points(&read_text(&a.input)?)?;
            Ok(Rendered::ok(to_json(&cmd_fit(&points)?)?))
        }
        Command::Environment(a) => {
            let report = cmd_environment(a.geometry, a.f, a.seed)?;
            Ok(Rendered::ok(match format {
                Some(Format::Json) => to_json(&report)?,
                Some(Format::Csv) => return Err(CliError::Precondition("environment has no CSV output".into())),
                None => report.rows.iter().fold(String::new(), |mut s, r| {
                    let _ = writeln!(s, "{r}");
                    s
                }),
            }))
        }
    }
}

/// Writes `body` to `path` through a temporary sibling file and a rename, so
/// readers never observe a half-written file.
pub fn write_atomically(path: &Path, body: &str) -> std::io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, body)?;
    std::fs::rename(&tmp, path).inspect_err(|_| {
        let _ = std::fs::remove_file(&tmp);
    })
}
