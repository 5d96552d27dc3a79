use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use drcvar_safety::bench::{bench_halfspace, BenchVariant};
use drcvar_safety::compare::{compare_halfspaces, ComparisonConfig};
use drcvar_safety::montecarlo::{monte_carlo, trial_rng};
use drcvar_safety::program::build_drcvar_program;
use drcvar_safety::program::DrcvarProblem;
use drcvar_safety::report::{emit_reports, Report};
use drcvar_safety::risk::{RiskKind, Support};
use drcvar_safety::sim::{builtin_scenario, run_closed_loop_with, RunOptions, ScenarioConfig};
use drcvar_safety::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Risk-aware safe halfspaces and a safety filter for sampled obstacle
/// predictions.
#[derive(Debug, Parser)]
#[command(name = "drsafe", version)]
struct Cli {
    /// Also write the convex programs that were solved, in LP format, under
    /// `<out>/programs`.
    #[arg(long, global = true)]
    dump_programs: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compare halfspaces of one sampled obstacle across risk metrics.
    Halfspace(HalfspaceArgs),
    /// Time halfspace computation against the sample count.
    Bench(BenchArgs),
    /// Run one closed-loop simulation.
    Simulate(SimulateArgs),
    /// Run repeated closed-loop trials per metric.
    Montecarlo(MontecarloArgs),
}

#[derive(Debug, Args)]
struct HalfspaceArgs {
    /// JSON comparison config; missing fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "mean,cvar,drcvar")]
    metrics: Vec<RiskKind>,
    #[arg(long, value_delimiter = ',', default_value = "0.05,0.1,0.2")]
    epsilons: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "10,50,100,500,1000")]
    samples: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    reps: usize,
    #[arg(long, value_delimiter = ',', default_value = "cvar,drcvar,cvar_program,drcvar_program")]
    variants: Vec<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Built-in scenario name or path to a scenario JSON file.
    #[arg(long, default_value = "head_on")]
    scenario: String,
    #[arg(long, default_value = "drcvar")]
    metric: RiskKind,
    /// Defaults to the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct MontecarloArgs {
    /// Built-in scenario name or path to a scenario JSON file.
    #[arg(long, default_value = "head_on")]
    scenario: String,
    #[arg(long, default_value_t = 300)]
    trials: usize,
    #[arg(long, value_delimiter = ',', default_value = "mean,cvar,drcvar")]
    metrics: Vec<RiskKind>,
    /// Defaults to the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

const EXIT_CONFIG: u8 = 2;
const EXIT_SOLVER: u8 = 3;
const EXIT_EXHAUSTED: u8 = 4;

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Solver(_) => EXIT_SOLVER,
        Error::NoSafeControl | Error::StartupInfeasible(_) => EXIT_EXHAUSTED,
        _ => EXIT_CONFIG,
    }
}

fn load_scenario(name: &str) -> Result<ScenarioConfig> {
    let path = Path::new(name);
    if path.extension().is_some_and(|e| e == "json") || path.is_file() {
        ScenarioConfig::load(path)
    } else {
        builtin_scenario(name)
    }
}

fn parse_variant(name: &str) -> Result<BenchVariant> {
    BenchVariant::ALL
        .into_iter()
        .find(|v| v.as_str() == name.trim())
        .ok_or_else(|| Error::InvalidParameter(format!("unknown bench variant '{name}'")))
}

fn programs_dir(out: &Path) -> PathBuf {
    out.join("programs")
}

fn write_lp(program: &drcvar_safety::program::ConicProgram, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    program.write_lp(&mut file).map_err(|e| Error::io(path, e))
}

fn run_halfspace(args: &HalfspaceArgs, dump: bool) -> Result<()> {
    let config = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            serde_json::from_str::<ComparisonConfig>(&text).map_err(|source| Error::Json {
                path: path.clone(),
                source,
            })?
        }
        None => ComparisonConfig::default(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let cmp = compare_halfspaces(&config, &args.metrics, &args.epsilons, &mut rng)?;
    if dump {
        for row in cmp.rows.iter().filter(|r| r.metric == RiskKind::DrCvar) {
            let program = build_drcvar_program(&DrcvarProblem {
                samples: &cmp.samples,
                h: &cmp.h,
                alpha: config.alpha,
                delta: config.delta,
                epsilon: row.epsilon.unwrap_or(0.0),
                support: &Support::Unbounded,
                inflation: row.halfspace.inflation(),
                ground_norm: Default::default(),
            })?;
            let name = format!("halfspace_drcvar_eps{}.lp", row.epsilon.unwrap_or(0.0));
            write_lp(&program, &programs_dir(&args.out).join(name))?;
        }
    }
    println!("h = [{:.6}, {:.6}]", cmp.h[0], cmp.h[1]);
    for row in &cmp.rows {
        println!(
            "{:<20} g_tilde {:>10.6}  g_star {:>10.6}  ego {}",
            row.label(),
            row.halfspace.g_tilde,
            row.halfspace.g_star,
            if row.ego_safe() { "inside" } else { "outside" }
        );
    }
    emit_reports(&[Report::Halfspace(cmp)], &args.out)?;
    Ok(())
}

fn run_bench(args: &BenchArgs) -> Result<()> {
    let variants = args
        .variants
        .iter()
        .map(|v| parse_variant(v))
        .collect::<Result<Vec<_>>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let report = bench_halfspace(&args.samples, args.reps, &variants, &mut rng)?;
    for row in &report.rows {
        println!(
            "{:<15} Ns {:>5}  median total {:>9.3} ms  solve {:>9.3} ms",
            row.variant.as_str(),
            row.samples,
            row.total_ms.median,
            row.solve_ms.median
        );
    }
    emit_reports(&[Report::Bench(report)], &args.out)?;
    Ok(())
}

fn run_simulate(args: &SimulateArgs, dump: bool) -> Result<()> {
    let scenario = load_scenario(&args.scenario)?.with_metric(args.metric);
    let seed = args.seed.unwrap_or(scenario.seed);
    // Same stream as trial 0 of a Monte-Carlo run with this seed.
    let mut rng = trial_rng(seed, args.metric, 0);
    let options = RunOptions {
        dump_dir: dump.then(|| programs_dir(&args.out)),
    };
    let record = run_closed_loop_with(&scenario, &mut rng, &options)?;
    println!(
        "{} {}: min distance {:.4}, goal distance {:.4}, fallback steps {}",
        record.scenario,
        record.metric,
        record.min_distance(),
        record.goal_distance,
        record.fallback_steps
    );
    emit_reports(&[Report::Simulation(record)], &args.out)?;
    Ok(())
}

fn run_montecarlo(args: &MontecarloArgs, dump: bool) -> Result<()> {
    let scenario = load_scenario(&args.scenario)?;
    let seed = args.seed.unwrap_or(scenario.seed);
    if dump {
        // Programs of the first trial per metric; dumping every trial would
        // dwarf the reports.
        for &metric in &args.metrics {
            let mut rng = trial_rng(seed, metric, 0);
            let options = RunOptions {
                dump_dir: Some(programs_dir(&args.out).join(metric.as_str())),
            };
            run_closed_loop_with(&scenario.with_metric(metric), &mut rng, &options)?;
        }
    }
    let reports = monte_carlo(&scenario, &args.metrics, args.trials, seed, args.jobs)?;
    for r in &reports {
        let (median, worst) = r.summary.map_or((f64::NAN, f64::NAN), |s| (s.median, s.min));
        println!(
            "{} {:<7} collisions {:>4}/{}  median {:>8.4}  worst {:>8.4}  failures {}  fallback steps {}",
            r.scenario,
            r.metric.as_str(),
            r.collision_count,
            r.trials,
            median,
            worst,
            r.failures.len(),
            r.fallback_steps
        );
    }
    emit_reports(&[Report::MonteCarlo(reports)], &args.out)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Halfspace(args) => run_halfspace(args, cli.dump_programs),
        Command::Bench(args) => run_bench(args),
        Command::Simulate(args) => run_simulate(args, cli.dump_programs),
        Command::Montecarlo(args) => run_montecarlo(args, cli.dump_programs),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
