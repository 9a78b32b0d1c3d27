//! Command-line driver: instance generation, single solver runs, config
//! driven experiments, axis sweeps, the exhaustive oracle, and the
//! exact-potential checker.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use hctab::game::{Action, CoalitionId};
use hctab::harness::{
    run_algorithm, run_experiment, sweep, write_report_files, AlgorithmId, ExperimentConfig,
    ExperimentReport, SolverParams, SweepAxis,
};
use hctab::instance::{
    budget_rate, generate_instance, parse_instance, serialize_instance, GeneratorConfig, Instance,
};
use hctab::learning::{run_traced, LearningParams, Scheduler, TraceStep, Variant};
use hctab::oracle::{brute_force_optimum_capped, check_potential_identity, DEFAULT_ENUMERATION_CAP};

/// Environment variable naming the default output directory for CSV files.
const OUT_DIR_ENV: &str = "HCTAB_OUT_DIR";

#[derive(Parser)]
#[command(name = "hctab", version, about = "Budget-constrained coalition-formation task allocation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random instance file.
    Generate(GenerateArgs),
    /// Run one algorithm on an instance file.
    Run(RunArgs),
    /// Run a config-driven multi-seed experiment.
    Experiment(ExperimentArgs),
    /// Sweep one scenario axis of an experiment config.
    Sweep(SweepArgs),
    /// Solve a small instance exactly by exhaustive search.
    Oracle(OracleArgs),
    /// Fuzz the exact-potential identity on an instance.
    CheckEpg(CheckEpgArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Number of tasks (agents are ratio x tasks).
    #[arg(long)]
    tasks: usize,
    #[arg(long, default_value_t = 3)]
    ratio: usize,
    /// Budget per task.
    #[arg(long, default_value_t = 5.0)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    universe: usize,
    /// Cost interval, e.g. 1,20.
    #[arg(long, value_parser = parse_f64_pair, default_value = "1,20")]
    cost_range: (f64, f64),
    /// Feasible-task fraction interval, e.g. 0.1,0.2.
    #[arg(long, value_parser = parse_f64_pair, default_value = "0.1,0.2")]
    feasible_fraction: (f64, f64),
    /// Capabilities per agent, e.g. 1,10.
    #[arg(long, value_parser = parse_usize_pair, default_value = "1,10")]
    caps_per_agent: (usize, usize),
    /// Capabilities per task, e.g. 5,10.
    #[arg(long, value_parser = parse_usize_pair, default_value = "5,10")]
    caps_per_task: (usize, usize),
    /// Integer competency interval, e.g. 1,10.
    #[arg(long, value_parser = parse_u32_pair, default_value = "1,10")]
    competency_range: (u32, u32),
    /// Output file; stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    instance: PathBuf,
    /// llh, llh-nce, llh-nhl, cf, brp, or bra.
    #[arg(long, default_value = "llh", value_parser = parse_algorithm)]
    algo: AlgorithmId,
    /// full, no-ce, or no-hll; only meaningful with --algo llh.
    #[arg(long, value_parser = parse_variant)]
    variant: Option<Variant>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 8.0)]
    beta0: f64,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, default_value_t = 300)]
    smooth: u32,
    /// Handoff budget; defaults to 500 per agent.
    #[arg(long)]
    tmax: Option<u64>,
    /// Better-reply stay probability.
    #[arg(long, default_value_t = 0.3)]
    chi: f64,
    /// random-relay or round-robin.
    #[arg(long, default_value = "random-relay", value_parser = parse_scheduler)]
    scheduler: Scheduler,
    /// Write one line per applied action to this file (LLH family only).
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; falls back to the config, then $HCTAB_OUT_DIR,
    /// then the working directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    /// budget-rate, heterogeneity, or agent-scale.
    #[arg(long, value_parser = parse_axis)]
    axis: SweepAxis,
    /// Comma-separated axis values, e.g. 1,3,5,7.
    #[arg(long, value_parser = parse_f64_list)]
    values: std::vec::Vec<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Enumeration cap on the number of assignment vectors.
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
    cap: u64,
}

#[derive(Args)]
struct CheckEpgArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Largest acceptable |du - dphi|.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

fn parse_algorithm(s: &str) -> Result<AlgorithmId, String> {
    s.parse().map_err(|e: hctab::Error| e.to_string())
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    match s.to_ascii_lowercase().as_str() {
        "full" => Ok(Variant::Full),
        "no-ce" => Ok(Variant::NoCe),
        "no-hll" => Ok(Variant::NoHll),
        other => Err(format!("unknown variant '{other}' (expected full, no-ce, or no-hll)")),
    }
}

fn parse_scheduler(s: &str) -> Result<Scheduler, String> {
    match s.to_ascii_lowercase().as_str() {
        "random-relay" => Ok(Scheduler::RandomRelay),
        "round-robin" => Ok(Scheduler::RoundRobin),
        other => Err(format!("unknown scheduler '{other}' (expected random-relay or round-robin)")),
    }
}

fn parse_axis(s: &str) -> Result<SweepAxis, String> {
    s.parse().map_err(|e: hctab::Error| e.to_string())
}

fn parse_f64_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|part| part.trim().parse::<f64>().map_err(|e| format!("bad value '{part}': {e}")))
        .collect()
}

fn parse_f64_pair(s: &str) -> Result<(f64, f64), String> {
    let values = parse_f64_list(s)?;
    match values[..] {
        [lo, hi] => Ok((lo, hi)),
        _ => Err(format!("expected 'lo,hi', got '{s}'")),
    }
}

fn parse_usize_pair(s: &str) -> Result<(usize, usize), String> {
    let (lo, hi) = parse_f64_pair(s)?;
    Ok((lo as usize, hi as usize))
}

fn parse_u32_pair(s: &str) -> Result<(u32, u32), String> {
    let (lo, hi) = parse_f64_pair(s)?;
    Ok((lo as u32, hi as u32))
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Generate(args) => generate(args),
        Command::Run(args) => run(args),
        Command::Experiment(args) => experiment(args),
        Command::Sweep(args) => run_sweep(args),
        Command::Oracle(args) => oracle(args),
        Command::CheckEpg(args) => check_epg(args),
    }
}

fn load_instance(path: &Path) -> Result<Instance> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_instance(&text).with_context(|| format!("parsing {}", path.display()))
}

fn generate(args: GenerateArgs) -> Result<()> {
    let cfg = GeneratorConfig {
        task_count: args.tasks,
        agents_per_task_ratio: args.ratio,
        feasible_fraction: args.feasible_fraction,
        capabilities_per_agent: args.caps_per_agent,
        capabilities_per_task: args.caps_per_task,
        competency_range: args.competency_range,
        cost_range: args.cost_range,
        budget_rate: args.alpha,
        universe: args.universe,
        seed: args.seed,
    };
    let instance = generate_instance(&cfg)?;
    let text = serialize_instance(&instance);
    match &args.output {
        Some(path) => {
            fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
            eprintln!(
                "wrote {} ({} agents, {} tasks, budget {})",
                path.display(),
                instance.agent_count(),
                instance.task_count(),
                instance.budget()
            );
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn run(args: RunArgs) -> Result<()> {
    let instance = load_instance(&args.instance)?;
    if args.variant.is_some() && args.algo != AlgorithmId::Llh {
        bail!("--variant applies only to --algo llh");
    }
    let algo = match (args.algo, args.variant) {
        (AlgorithmId::Llh, Some(Variant::NoCe)) => AlgorithmId::LlhNce,
        (AlgorithmId::Llh, Some(Variant::NoHll)) => AlgorithmId::LlhNhl,
        (algo, _) => algo,
    };
    let params = SolverParams {
        beta0: args.beta0,
        lambda: args.lambda,
        smooth: args.smooth,
        chi: args.chi,
        t_max: args.tmax,
        scheduler: args.scheduler,
    };

    let result = if let Some(trace_path) = &args.trace {
        let variant = match algo {
            AlgorithmId::Llh => Variant::Full,
            AlgorithmId::LlhNce => Variant::NoCe,
            AlgorithmId::LlhNhl => Variant::NoHll,
            other => bail!("--trace applies only to the LLH family, not {other}"),
        };
        let learning = LearningParams {
            beta0: args.beta0,
            lambda: args.lambda,
            smooth: args.smooth,
            t_max: args.tmax.unwrap_or(500 * instance.agent_count() as u64),
            variant,
            scheduler: args.scheduler,
            seed: args.seed,
        };
        let (result, steps) = run_traced(&instance, &learning)?;
        fs::write(trace_path, render_trace(&steps))
            .with_context(|| format!("writing {}", trace_path.display()))?;
        result
    } else {
        run_algorithm(algo, &instance, &params, args.seed)?
    };

    println!("algorithm: {algo}");
    println!("objective: {}", result.objective);
    println!("iterations: {}", result.iterations);
    println!("converged: {}", result.converged);
    println!("cu_rate: {:.4}", result.cu_rate);
    println!("budget_rate: {}", budget_rate(&instance));
    println!("wall_ms: {}", result.wall_time.as_millis());
    Ok(())
}

fn render_trace(steps: &[TraceStep]) -> String {
    let mut out = String::from("t,agent,action_kind,target,partner,gain,phi_after\n");
    for step in steps {
        let (kind, target, partner) = match step.action {
            Action::Stay => ("stay".to_string(), "-".to_string(), "-".to_string()),
            Action::Join(c) => {
                let target = match c {
                    CoalitionId::Task(j) => j.to_string(),
                    CoalitionId::Dummy => "dummy".to_string(),
                };
                ("join".to_string(), target, "-".to_string())
            }
            Action::Exchange { target, partner } => {
                ("exchange".to_string(), target.to_string(), partner.to_string())
            }
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            step.t, step.agent, kind, target, partner, step.gain, step.phi_after
        ));
    }
    out
}

fn resolve_out_dir(flag: Option<PathBuf>, config_out: Option<&str>) -> PathBuf {
    flag.or_else(|| config_out.map(PathBuf::from))
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn finish_report(report: &ExperimentReport, dir: &Path) -> Result<()> {
    let (runs_path, summary_path) = write_report_files(report, dir)?;
    print!("{}", hctab::harness::summary_csv(&report.rows));
    eprintln!("wrote {} and {}", runs_path.display(), summary_path.display());
    if !report.failures.is_empty() {
        for failure in &report.failures {
            eprintln!("scenario {} failed: {}", failure.scenario, failure.error);
        }
        bail!("{} scenario(s) failed", report.failures.len());
    }
    Ok(())
}

fn experiment(args: ExperimentArgs) -> Result<()> {
    let text = fs::read_to_string(&args.config)
        .with_context(|| format!("reading {}", args.config.display()))?;
    let cfg = ExperimentConfig::from_toml_str(&text)?;
    let report = run_experiment(&cfg)?;
    let dir = resolve_out_dir(args.out, cfg.output.as_deref());
    finish_report(&report, &dir)
}

fn run_sweep(args: SweepArgs) -> Result<()> {
    let text = fs::read_to_string(&args.config)
        .with_context(|| format!("reading {}", args.config.display()))?;
    let cfg = ExperimentConfig::from_toml_str(&text)?;
    let report = sweep(&cfg, args.axis, &args.values)?;
    let dir = resolve_out_dir(args.out, cfg.output.as_deref());
    finish_report(&report, &dir)
}

fn oracle(args: OracleArgs) -> Result<()> {
    let instance = load_instance(&args.instance)?;
    let result = brute_force_optimum_capped(&instance, args.cap)?;
    println!("best_value: {}", result.best_value);
    println!("states_enumerated: {}", result.states_enumerated);
    for j in instance.task_ids() {
        let members: Vec<String> =
            result.best_partition.members(j).iter().map(|a| a.to_string()).collect();
        println!("task {}: {}", j, if members.is_empty() { "-".into() } else { members.join(" ") });
    }
    let unassigned: Vec<String> = instance
        .agent_ids()
        .filter(|&i| result.best_partition.coalition_of(i).is_dummy())
        .map(|i| i.to_string())
        .collect();
    println!("unassigned: {}", if unassigned.is_empty() { "-".into() } else { unassigned.join(" ") });
    Ok(())
}

fn check_epg(args: CheckEpgArgs) -> Result<()> {
    let instance = load_instance(&args.instance)?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let report = check_potential_identity(&instance, args.trials, &mut rng);
    println!("trials_run: {}", report.trials_run);
    println!("max_abs_error: {:e}", report.max_abs_error);
    if report.max_abs_error > args.tol {
        bail!("exact-potential identity violated: {:e} > {:e}", report.max_abs_error, args.tol);
    }
    Ok(())
}
