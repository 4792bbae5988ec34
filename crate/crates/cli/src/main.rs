//! `rollhorizon` command-line front end.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rollhorizon::instance_io::synthetic::{corpus, RandomSpec};
use rollhorizon::instance_io::{read_report, ConfigOverrides};
use rollhorizon::model::ConfigError;
use rollhorizon::travel::{load_matrix, TravelError};
use rollhorizon::{
    adapt_benchmark, load_csv_requests, load_lilim, minutes, run, validate_report, write_report, EngineError, Instance64,
    InstanceError, Location, PenaltyPolicy, Report64, ReportFormat, SolverConfig, Travel,
};

const EXIT_OTHER: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_CONFIG: u8 = 3;

#[derive(Parser)]
#[command(name = "rollhorizon", version, about = "Rolling-horizon PDPTW solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the engine once and write a report.
    Solve(SolveArgs),
    /// Run every fleet size × rh factor combination and emit one CSV row each.
    Sweep(SweepArgs),
    /// Check a report against the independent validator.
    Validate(ValidateArgs),
    /// Print the parameters derived for a Li & Lim instance.
    Adapt(AdaptArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum InputFormat {
    Lilim,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Json,
    Csv,
}

impl From<OutputFormat> for ReportFormat {
    fn from(f: OutputFormat) -> Self {
        match f {
            OutputFormat::Json => ReportFormat::Json,
            OutputFormat::Csv => ReportFormat::Csv,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Profile {
    /// Capacity 8, 30 min windows, 10 min dwell, 15 min step.
    Carta,
    /// As `carta` with a 5 min step.
    Nyc,
}

#[derive(Args, Clone)]
struct InstanceArgs {
    #[arg(long, default_value = "lilim")]
    format: InputFormat,
    /// Travel matrix file; CSV `x` columns are then node ids.
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// Depot for CSV instances, `x,y` (or a node id with --matrix).
    #[arg(long, default_value = "0,0")]
    depot: String,
    /// Euclidean speed for CSV instances, distance units per minute.
    #[arg(long, default_value_t = 1.0)]
    speed: f64,
    /// Keep Li & Lim instances on the profile parameters instead of rescaling.
    #[arg(long)]
    no_adapt: bool,
    /// Horizon, in minutes, that the profile parameters are meant for.
    #[arg(long, default_value_t = 720.0)]
    reference_horizon_min: f64,
}

#[derive(Args, Clone)]
struct ParamArgs {
    #[arg(long, default_value = "carta")]
    profile: Profile,
    #[arg(long)]
    capacity: Option<u32>,
    #[arg(long)]
    step_min: Option<f64>,
    #[arg(long)]
    max_wait_min: Option<f64>,
    #[arg(long)]
    max_delay_min: Option<f64>,
    #[arg(long)]
    dwell_min: Option<f64>,
    #[arg(long)]
    horizon_min: Option<f64>,
    /// Fixed penalty per ignored request; default is derived from the graph.
    #[arg(long)]
    penalty: Option<f64>,
    /// Exhaustive route search up to this many requests, insertion above.
    #[arg(long)]
    exhaustive_limit: Option<usize>,
    #[arg(long)]
    trip_size_limit: Option<usize>,
    #[arg(long)]
    ilp_node_budget: Option<u64>,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    instance: PathBuf,
    #[command(flatten)]
    input: InstanceArgs,
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long)]
    fleet_size: Option<usize>,
    #[arg(long)]
    rh_factor: Option<u32>,
    /// Report path; defaults to `<instance stem>.report.<ext>` in the working directory.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, default_value = "json")]
    output_format: OutputFormat,
    /// Print the resolved configuration before running.
    #[arg(long)]
    echo_config: bool,
    /// Keep wall-clock timings in the report file.
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, num_args = 1..)]
    instance: Vec<PathBuf>,
    #[command(flatten)]
    input: InstanceArgs,
    #[command(flatten)]
    params: ParamArgs,
    /// Generate this many random instances instead of reading files.
    #[arg(long)]
    corpus: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    corpus_requests: Option<usize>,
    #[arg(long)]
    corpus_area: Option<f64>,
    #[arg(long)]
    corpus_speed: Option<f64>,
    #[arg(long)]
    corpus_horizon_min: Option<f64>,
    #[arg(long, value_delimiter = ',', default_value = "3,4,5,6,7")]
    fleets: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,3")]
    rh_factors: Vec<u32>,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Fill the sec_per_request column (makes output run-dependent).
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    report: PathBuf,
    /// Instance used for travel-time checks.
    #[arg(long)]
    instance: Option<PathBuf>,
    #[command(flatten)]
    input: InstanceArgs,
}

#[derive(Args)]
struct AdaptArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value_t = 720.0)]
    reference_horizon_min: f64,
}

/// Error carrying the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn new(code: u8, error: impl Into<anyhow::Error>) -> Self {
        Failure { code, error: error.into() }
    }
}

impl From<InstanceError> for Failure {
    fn from(e: InstanceError) -> Self {
        Failure::new(EXIT_PARSE, e)
    }
}

impl From<TravelError> for Failure {
    fn from(e: TravelError) -> Self {
        Failure::new(EXIT_PARSE, e)
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::new(EXIT_CONFIG, e)
    }
}

impl From<EngineError> for Failure {
    fn from(e: EngineError) -> Self {
        let code = match e {
            EngineError::Config(_) => EXIT_CONFIG,
            EngineError::Instance(_) => EXIT_PARSE,
            _ => EXIT_OTHER,
        };
        Failure::new(code, e)
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::new(EXIT_OTHER, e)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(args) => solve(args),
        Command::Sweep(args) => sweep(args),
        Command::Validate(args) => validate(args),
        Command::Adapt(args) => adapt(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn parse_depot(text: &str, matrix: bool) -> Result<Location<f64>, Failure> {
    let bad = || Failure::new(EXIT_PARSE, anyhow::anyhow!("--depot expects `x,y` or a node id, got `{text}`"));
    if matrix {
        let node: usize = text.split(',').next().unwrap_or("").trim().parse().map_err(|_| bad())?;
        return Ok(Location::node(node));
    }
    let (x, y) = text.split_once(',').ok_or_else(bad)?;
    let x: f64 = x.trim().parse().map_err(|_| bad())?;
    let y: f64 = y.trim().parse().map_err(|_| bad())?;
    Ok(Location::new(x, y))
}

fn load_instance(path: &Path, input: &InstanceArgs) -> Result<Instance64, Failure> {
    match input.format {
        InputFormat::Lilim => {
            let instance: Instance64 = load_lilim(path)?;
            if input.no_adapt {
                return Ok(instance);
            }
            Ok(adapt_benchmark(&instance, minutes(input.reference_horizon_min))?)
        }
        InputFormat::Csv => {
            let travel = match &input.matrix {
                Some(m) => Travel::Matrix(load_matrix(m)?),
                None => Travel::euclidean(input.speed),
            };
            let depot = parse_depot(&input.depot, input.matrix.is_some())?;
            Ok(load_csv_requests(path, travel, depot)?)
        }
    }
}

fn profile_config(profile: Profile) -> SolverConfig {
    let mut config = SolverConfig {
        capacity: 8,
        max_wait: minutes(30.0),
        max_delay: minutes(30.0),
        dwell: minutes(10.0),
        step: minutes(15.0),
        ..SolverConfig::default()
    };
    if let Profile::Nyc = profile {
        config.step = minutes(5.0);
    }
    config
}

/// Profile, then whatever the instance carries, then explicit flags.
fn resolve_config(
    params: &ParamArgs,
    instance_overrides: &ConfigOverrides,
    fleet_size: Option<usize>,
    rh_factor: Option<u32>,
) -> SolverConfig {
    let mut config = profile_config(params.profile);
    instance_overrides.apply(&mut config);
    let flags = ConfigOverrides {
        horizon: params.horizon_min.map(minutes),
        step: params.step_min.map(minutes),
        max_wait: params.max_wait_min.map(minutes),
        max_delay: params.max_delay_min.map(minutes),
        dwell: params.dwell_min.map(minutes),
        fleet_size,
        capacity: params.capacity,
    };
    flags.apply(&mut config);
    if let Some(c) = rh_factor {
        config.rh_factor = c;
    }
    if let Some(p) = params.penalty {
        config.penalty = PenaltyPolicy::Fixed(p);
    }
    if let Some(l) = params.exhaustive_limit {
        config.exhaustive_route_limit = l;
    }
    if params.trip_size_limit.is_some() {
        config.trip_size_limit = params.trip_size_limit;
    }
    if let Some(b) = params.ilp_node_budget {
        config.ilp_node_budget = b;
    }
    config
}

fn echo(config: &SolverConfig) -> String {
    let m = |s: i64| s as f64 / 60.0;
    format!(
        "horizon_min={} step_min={} rh_factor={} window_min={} max_wait_min={} max_delay_min={} dwell_min={} fleet_size={} capacity={} penalty={:?}",
        m(config.horizon),
        m(config.step),
        config.rh_factor,
        m(config.window_size()),
        m(config.max_wait),
        m(config.max_delay),
        m(config.dwell),
        config.fleet_size,
        config.capacity,
        config.penalty,
    )
}

fn summary_line(report: &Report64) -> String {
    let m = &report.metrics;
    let per_request = m.compute_time_per_request.map_or_else(|| "-".to_string(), |t| format!("{t:.4}"));
    let delay = if m.delay_defined { format!("{:.2}", m.avg_delay) } else { "-".to_string() };
    format!(
        "instance={} served={}/{} service_rate={:.4} avg_delay_min={} vmt={:.2} sec_per_request={}",
        report.instance, m.served, m.requests, m.service_rate, delay, m.total_vmt, per_request
    )
}

fn solve(args: SolveArgs) -> Result<u8, Failure> {
    let instance = load_instance(&args.instance, &args.input)?;
    let config = resolve_config(&args.params, &instance.overrides, args.fleet_size, args.rh_factor);
    rollhorizon::validate_config(&config)?;
    if args.echo_config {
        println!("{}", echo(&config));
    }
    let report = run(&instance, &config)?;
    let format: ReportFormat = args.output_format.into();
    let output = args.output.unwrap_or_else(|| {
        let ext = match format {
            ReportFormat::Json => "json",
            ReportFormat::Csv => "csv",
        };
        PathBuf::from(format!("{}.report.{ext}", instance.name))
    });
    let line = summary_line(&report);
    let to_write = if args.timing { report } else { report.without_timing() };
    write_report(&to_write, &output, format).map_err(|e| Failure::new(EXIT_OTHER, e))?;
    println!("{line}");
    Ok(0)
}

struct SweepJob {
    instance: usize,
    fleet: usize,
    rh_factor: u32,
}

fn sweep_row(name: &str, job: &SweepJob, outcome: Result<Report64, String>, timing: bool) -> String {
    match outcome {
        Ok(report) => {
            let m = &report.metrics;
            let per_request = match (timing, m.compute_time_per_request) {
                (true, Some(t)) => format!("{t:.6}"),
                _ => String::new(),
            };
            let delay = if m.delay_defined { format!("{:.4}", m.avg_delay) } else { String::new() };
            format!(
                "{name},{},{},{:.6},{delay},{:.4},{per_request},ok",
                job.fleet, job.rh_factor, m.service_rate, m.total_vmt
            )
        }
        Err(message) => {
            let message = message.replace([',', '\n'], ";");
            format!("{name},{},{},,,,,error: {message}", job.fleet, job.rh_factor)
        }
    }
}

fn sweep_threads() -> Result<usize, Failure> {
    match std::env::var("ROLLHORIZON_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Failure::new(EXIT_CONFIG, anyhow::anyhow!("ROLLHORIZON_THREADS must be a positive integer, got `{v}`"))),
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn sweep(args: SweepArgs) -> Result<u8, Failure> {
    use rayon::prelude::*;

    let instances: Vec<Instance64> = match args.corpus {
        Some(count) => {
            let mut spec = RandomSpec::bundled();
            if let Some(n) = args.corpus_requests {
                spec.requests = n;
            }
            if let Some(a) = args.corpus_area {
                spec.area = a;
            }
            if let Some(s) = args.corpus_speed {
                spec.speed = s;
            }
            if let Some(h) = args.corpus_horizon_min {
                spec.horizon = minutes(h);
            }
            corpus(&spec, args.seed, count)
        }
        None => {
            if args.instance.is_empty() {
                return Err(Failure::new(EXIT_PARSE, anyhow::anyhow!("give --instance or --corpus")));
            }
            args.instance.iter().map(|p| load_instance(p, &args.input)).collect::<Result<_, _>>()?
        }
    };
    if args.fleets.is_empty() || args.rh_factors.is_empty() {
        return Err(Failure::new(EXIT_CONFIG, anyhow::anyhow!("--fleets and --rh-factors must be non-empty")));
    }

    let mut jobs = Vec::new();
    for i in 0..instances.len() {
        for &fleet in &args.fleets {
            for &rh_factor in &args.rh_factors {
                jobs.push(SweepJob { instance: i, fleet, rh_factor });
            }
        }
    }
    let configs: Vec<SolverConfig> = jobs
        .iter()
        .map(|j| resolve_config(&args.params, &instances[j.instance].overrides, Some(j.fleet), Some(j.rh_factor)))
        .collect();
    // a bad flag is bad for every row
    if let Some(c) = configs.first() {
        rollhorizon::validate_config(c)?;
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(sweep_threads()?)
        .build()
        .context("building worker pool")?;
    let rows: Vec<String> = pool.install(|| {
        jobs.par_iter()
            .zip(configs.par_iter())
            .map(|(job, config)| {
                let instance = &instances[job.instance];
                let outcome = run(instance, config).map_err(|e| e.to_string());
                sweep_row(&instance.name, job, outcome, args.timing)
            })
            .collect()
    });

    let mut csv = String::from("instance,fleet,rh_factor,service_rate,avg_delay,vmt,sec_per_request,status\n");
    for row in rows {
        csv.push_str(&row);
        csv.push('\n');
    }
    match &args.output {
        Some(path) => std::fs::write(path, csv).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{csv}"),
    }
    Ok(0)
}

fn validate(args: ValidateArgs) -> Result<u8, Failure> {
    let report: Report64 = read_report(&args.report)?;
    let travel = match &args.instance {
        Some(path) => Some(load_instance(path, &args.input)?.travel),
        None => None,
    };
    let violations = validate_report(&report, travel.as_ref());
    if violations.is_empty() {
        println!("ok: {} records, {} routes, no violations", report.records.len(), report.routes.len());
        return Ok(0);
    }
    for v in &violations {
        println!("{v}");
    }
    eprintln!("{} violation(s)", violations.len());
    Ok(EXIT_OTHER)
}

fn adapt(args: AdaptArgs) -> Result<u8, Failure> {
    let instance: Instance64 = load_lilim(&args.instance)?;
    let reference = minutes(args.reference_horizon_min);
    let adapted = adapt_benchmark(&instance, reference)?;
    let o = &adapted.overrides;
    let m = |v: Option<i64>| v.map_or(f64::NAN, |s| s as f64 / 60.0);
    println!(
        "instance={} native_horizon={} reference_horizon_min={} max_wait={} max_delay={} dwell={} step={} fleet_size={} capacity={}",
        adapted.name,
        m(adapted.native_horizon),
        args.reference_horizon_min,
        m(o.max_wait),
        m(o.max_delay),
        m(o.dwell),
        m(o.step),
        o.fleet_size.map_or_else(|| "-".into(), |v| v.to_string()),
        o.capacity.map_or_else(|| "-".into(), |v| v.to_string()),
    );
    Ok(0)
}
