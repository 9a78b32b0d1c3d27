//! Experiment driver: multi-seed comparisons of the solvers on generated
//! scenarios, axis sweeps (budget rate, cost heterogeneity, agent scale),
//! and CSV emission.
//!
//! Scenario cells (scenario x algorithm x repeat) are independent and run
//! in parallel; records are assembled in a fixed order so two executions
//! of one config differ only in wall-time columns.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{run_bra, run_brp, run_cf, BaselineParams};
use crate::error::{Error, Result};
use crate::instance::{generate_instance, GeneratorConfig, Instance};
use crate::learning::{self, LearningParams, RunResult, Scheduler, Variant};

/// The algorithms the harness can dispatch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlgorithmId {
    Llh,
    LlhNce,
    LlhNhl,
    Cf,
    Brp,
    Bra,
}

impl AlgorithmId {
    pub const ALL: [AlgorithmId; 6] = [
        AlgorithmId::Llh,
        AlgorithmId::LlhNce,
        AlgorithmId::LlhNhl,
        AlgorithmId::Cf,
        AlgorithmId::Brp,
        AlgorithmId::Bra,
    ];
}

impl fmt::Display for AlgorithmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let label = match self {
            AlgorithmId::Llh => "LLH",
            AlgorithmId::LlhNce => "LLH-NCE",
            AlgorithmId::LlhNhl => "LLH-NHL",
            AlgorithmId::Cf => "CF",
            AlgorithmId::Brp => "BRP",
            AlgorithmId::Bra => "BRA",
        };
        f.write_str(label)
    }
}

impl FromStr for AlgorithmId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "llh" => Ok(AlgorithmId::Llh),
            "llh-nce" => Ok(AlgorithmId::LlhNce),
            "llh-nhl" => Ok(AlgorithmId::LlhNhl),
            "cf" => Ok(AlgorithmId::Cf),
            "brp" => Ok(AlgorithmId::Brp),
            "bra" => Ok(AlgorithmId::Bra),
            other => Err(Error::Parse(format!("unknown algorithm '{other}'"))),
        }
    }
}

/// Solver knobs shared by every cell of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverParams {
    pub beta0: f64,
    pub lambda: f64,
    pub smooth: u32,
    /// Stay probability of the better-reply baseline.
    pub chi: f64,
    /// Handoff budget; defaults to 500 per agent when unset.
    pub t_max: Option<u64>,
    pub scheduler: Scheduler,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            beta0: 8.0,
            lambda: 1.0,
            smooth: 300,
            chi: 0.3,
            t_max: None,
            scheduler: Scheduler::RandomRelay,
        }
    }
}

impl SolverParams {
    fn t_max_for(&self, instance: &Instance) -> u64 {
        self.t_max.unwrap_or(500 * instance.agent_count() as u64)
    }

    fn learning_params(&self, variant: Variant, instance: &Instance, seed: u64) -> LearningParams {
        LearningParams {
            beta0: self.beta0,
            lambda: self.lambda,
            smooth: self.smooth,
            t_max: self.t_max_for(instance),
            variant,
            scheduler: self.scheduler,
            seed,
        }
    }

    fn baseline_params(&self, instance: &Instance, seed: u64) -> BaselineParams {
        BaselineParams {
            chi: self.chi,
            t_max: self.t_max_for(instance),
            seed,
            scheduler: self.scheduler,
        }
    }
}

/// One generated scenario; the label defaults to `n{n}-m{m}` so result rows
/// name both counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(default)]
    pub id: Option<String>,
    #[serde(flatten)]
    pub generator: GeneratorConfig,
}

impl Scenario {
    pub fn label(&self) -> String {
        match &self.id {
            Some(id) => id.clone(),
            None => format!(
                "n{}-m{}",
                self.generator.agents_per_task_ratio * self.generator.task_count,
                self.generator.task_count
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenarios: Vec<Scenario>,
    pub algorithms: Vec<AlgorithmId>,
    /// Runs per scenario-algorithm cell.
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    /// Algorithm whose average anchors the gap column.
    #[serde(default = "default_reference")]
    pub reference: AlgorithmId,
    #[serde(default)]
    pub base_seed: u64,
    /// Regenerate the instance for every repeat instead of fixing one
    /// instance per scenario.
    #[serde(default)]
    pub fresh_instance_per_repeat: bool,
    #[serde(default)]
    pub params: SolverParams,
    /// Default output directory for the CSV files.
    #[serde(default)]
    pub output: Option<String>,
}

fn default_repeats() -> usize {
    10
}

fn default_reference() -> AlgorithmId {
    AlgorithmId::Llh
}

impl ExperimentConfig {
    /// Minimal config over one scenario with the given algorithms.
    pub fn single_scenario(generator: GeneratorConfig, algorithms: Vec<AlgorithmId>) -> Self {
        Self {
            scenarios: vec![Scenario { id: None, generator }],
            algorithms,
            repeats: default_repeats(),
            reference: default_reference(),
            base_seed: 0,
            fresh_instance_per_repeat: false,
            params: SolverParams::default(),
            output: None,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.scenarios.is_empty() {
            return Err(Error::InvalidParams("experiment needs at least one scenario".into()));
        }
        if self.algorithms.is_empty() {
            return Err(Error::InvalidParams("experiment needs at least one algorithm".into()));
        }
        if self.repeats == 0 {
            return Err(Error::InvalidParams("repeats must be >= 1".into()));
        }
        if !self.algorithms.contains(&self.reference) {
            return Err(Error::InvalidParams(format!(
                "reference algorithm {} is not in the algorithm set",
                self.reference
            )));
        }
        if !(self.params.chi.is_finite() && (0.0..1.0).contains(&self.params.chi)) {
            return Err(Error::InvalidParams(format!("chi must lie in [0, 1), got {}", self.params.chi)));
        }
        if !(self.params.beta0.is_finite() && self.params.beta0 >= 0.0) {
            return Err(Error::InvalidParams(format!("beta0 must be >= 0, got {}", self.params.beta0)));
        }
        if !(self.params.lambda.is_finite() && self.params.lambda >= 1.0) {
            return Err(Error::InvalidParams(format!("lambda must be >= 1, got {}", self.params.lambda)));
        }
        if self.params.smooth == 0 {
            return Err(Error::InvalidParams("smooth must be a positive integer".into()));
        }
        if self.params.t_max == Some(0) {
            return Err(Error::InvalidParams("t_max must be >= 1".into()));
        }
        // Generator problems surface per scenario at generation time so one
        // bad scenario cannot abort the others.
        for scenario in &self.scenarios {
            if scenario.label().contains(',') {
                return Err(Error::InvalidParams(format!(
                    "scenario id '{}' must not contain commas",
                    scenario.label()
                )));
            }
        }
        Ok(())
    }
}

/// One solver execution, as written to the per-run CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub scenario: String,
    pub algorithm: AlgorithmId,
    pub seed: u64,
    pub objective: f64,
    pub cu_rate: f64,
    pub iterations: u64,
    pub converged: bool,
    pub wall: Duration,
}

/// Per scenario-algorithm aggregate over the repeats.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub scenario: String,
    pub algorithm: AlgorithmId,
    pub best: f64,
    pub worst: f64,
    pub average: f64,
    /// Percentage gap of this algorithm's average below the reference
    /// algorithm's average; `None` when undefined (zero average).
    pub gap_pct: Option<f64>,
    /// Mean cost-utilization rate.
    pub cu_rate: f64,
    /// Mean solver wall time in seconds.
    pub cpu_time_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioFailure {
    pub scenario: String,
    pub error: String,
}

#[derive(Debug, Clone, Default)]
pub struct ExperimentReport {
    pub rows: Vec<MetricsRow>,
    pub runs: Vec<RunRecord>,
    pub failures: Vec<ScenarioFailure>,
}

/// Percentage by which `avg_reference` exceeds `avg_algorithm`, relative to
/// the latter. Undefined when the algorithm average is not positive.
pub fn compute_gap(avg_reference: f64, avg_algorithm: f64) -> Result<f64> {
    if !avg_algorithm.is_finite() || avg_algorithm <= 0.0 {
        return Err(Error::GapUndefined);
    }
    Ok(100.0 * (avg_reference - avg_algorithm) / avg_algorithm)
}

/// Dispatches one algorithm on one instance with one seed.
pub fn run_algorithm(
    algo: AlgorithmId,
    instance: &Instance,
    params: &SolverParams,
    seed: u64,
) -> Result<RunResult> {
    match algo {
        AlgorithmId::Llh => learning::run(instance, &params.learning_params(Variant::Full, instance, seed)),
        AlgorithmId::LlhNce => {
            learning::run(instance, &params.learning_params(Variant::NoCe, instance, seed))
        }
        AlgorithmId::LlhNhl => {
            learning::run(instance, &params.learning_params(Variant::NoHll, instance, seed))
        }
        AlgorithmId::Cf => run_cf(instance, &params.baseline_params(instance, seed)),
        AlgorithmId::Brp => run_brp(instance, &params.baseline_params(instance, seed)),
        AlgorithmId::Bra => run_bra(instance, &params.baseline_params(instance, seed)),
    }
}

/// Runs every scenario of the config. Scenario-level errors are collected
/// into the report's failure list without aborting the other scenarios.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let mut report = ExperimentReport::default();
    for scenario in &cfg.scenarios {
        match run_scenario(cfg, scenario) {
            Ok((records, rows)) => {
                report.runs.extend(records);
                report.rows.extend(rows);
            }
            Err(err) => {
                report.failures.push(ScenarioFailure {
                    scenario: scenario.label(),
                    error: err.to_string(),
                });
            }
        }
    }
    Ok(report)
}

fn run_scenario(
    cfg: &ExperimentConfig,
    scenario: &Scenario,
) -> Result<(Vec<RunRecord>, Vec<MetricsRow>)> {
    let label = scenario.label();
    let instances: Vec<Instance> = if cfg.fresh_instance_per_repeat {
        (0..cfg.repeats)
            .map(|r| {
                let mut generator = scenario.generator.clone();
                generator.seed ^= r as u64;
                generate_instance(&generator)
            })
            .collect::<Result<_>>()?
    } else {
        vec![generate_instance(&scenario.generator)?]
    };

    let cells: Vec<(AlgorithmId, usize)> = cfg
        .algorithms
        .iter()
        .flat_map(|&algo| (0..cfg.repeats).map(move |r| (algo, r)))
        .collect();
    let records: Vec<RunRecord> = cells
        .par_iter()
        .map(|&(algo, repeat)| {
            let instance = &instances[if cfg.fresh_instance_per_repeat { repeat } else { 0 }];
            let seed = cfg.base_seed ^ repeat as u64;
            let result = run_algorithm(algo, instance, &cfg.params, seed)?;
            Ok(RunRecord {
                scenario: label.clone(),
                algorithm: algo,
                seed,
                objective: result.objective,
                cu_rate: result.cu_rate,
                iterations: result.iterations,
                converged: result.converged,
                wall: result.wall_time,
            })
        })
        .collect::<Result<_>>()?;

    let reference_avg = average_objective(&records, cfg.reference);
    let rows = cfg
        .algorithms
        .iter()
        .map(|&algo| {
            let cell: Vec<&RunRecord> = records.iter().filter(|r| r.algorithm == algo).collect();
            let objectives: Vec<f64> = cell.iter().map(|r| r.objective).collect();
            let average = objectives.iter().sum::<f64>() / objectives.len() as f64;
            MetricsRow {
                scenario: label.clone(),
                algorithm: algo,
                best: objectives.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)),
                worst: objectives.iter().fold(f64::INFINITY, |a, &b| a.min(b)),
                average,
                gap_pct: compute_gap(reference_avg, average).ok(),
                cu_rate: cell.iter().map(|r| r.cu_rate).sum::<f64>() / cell.len() as f64,
                cpu_time_s: cell.iter().map(|r| r.wall.as_secs_f64()).sum::<f64>() / cell.len() as f64,
            }
        })
        .collect();
    Ok((records, rows))
}

fn average_objective(records: &[RunRecord], algo: AlgorithmId) -> f64 {
    let objectives: Vec<f64> =
        records.iter().filter(|r| r.algorithm == algo).map(|r| r.objective).collect();
    objectives.iter().sum::<f64>() / objectives.len() as f64
}

/// Sweep axes mirroring the experiment dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// Budget per task.
    BudgetRate,
    /// Target cost-heterogeneity degree in `[0, 1]`.
    Heterogeneity,
    /// Total number of agents (must be a multiple of the scenario ratio).
    AgentScale,
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "budget-rate" | "alpha" => Ok(SweepAxis::BudgetRate),
            "heterogeneity" | "gamma" => Ok(SweepAxis::Heterogeneity),
            "agent-scale" | "agents" => Ok(SweepAxis::AgentScale),
            other => Err(Error::Parse(format!("unknown sweep axis '{other}'"))),
        }
    }
}

/// Clones every scenario of the config once per axis value and runs the
/// expanded experiment. Rows carry the axis value in their scenario label.
pub fn sweep(cfg: &ExperimentConfig, axis: SweepAxis, values: &[f64]) -> Result<ExperimentReport> {
    cfg.validate()?;
    if values.is_empty() {
        return Err(Error::InvalidParams("sweep needs at least one axis value".into()));
    }
    let mut expanded = cfg.clone();
    expanded.scenarios = Vec::new();
    let mut failures = Vec::new();
    for &value in values {
        for base in &cfg.scenarios {
            match derive_scenario(base, axis, value) {
                Ok(scenario) => expanded.scenarios.push(scenario),
                Err(err) => failures.push(ScenarioFailure {
                    scenario: format!("{}-{}", base.label(), axis_tag(axis, value)),
                    error: err.to_string(),
                }),
            }
        }
    }
    if expanded.scenarios.is_empty() {
        return Err(Error::InvalidParams("no sweep value produced a valid scenario".into()));
    }
    let mut report = run_experiment(&expanded)?;
    report.failures.extend(failures);
    Ok(report)
}

fn axis_tag(axis: SweepAxis, value: f64) -> String {
    match axis {
        SweepAxis::BudgetRate => format!("alpha{value}"),
        SweepAxis::Heterogeneity => format!("gamma{value}"),
        SweepAxis::AgentScale => format!("n{value}"),
    }
}

fn derive_scenario(base: &Scenario, axis: SweepAxis, value: f64) -> Result<Scenario> {
    let mut generator = base.generator.clone();
    match axis {
        SweepAxis::BudgetRate => {
            generator.budget_rate = value;
        }
        SweepAxis::Heterogeneity => {
            generator.cost_range = heterogeneity_interval(base.generator.cost_range, value)?;
        }
        SweepAxis::AgentScale => {
            let agents = value.round();
            if (agents - value).abs() > 1e-9 || agents < 1.0 {
                return Err(Error::InvalidParams(format!("agent count {value} is not a positive integer")));
            }
            let agents = agents as usize;
            let ratio = generator.agents_per_task_ratio;
            if !agents.is_multiple_of(ratio) {
                return Err(Error::InvalidParams(format!(
                    "agent count {agents} is not a multiple of the scenario ratio {ratio}"
                )));
            }
            generator.task_count = agents / ratio;
        }
    }
    Ok(Scenario { id: Some(format!("{}-{}", base.label(), axis_tag(axis, value))), generator })
}

/// Cost interval realizing heterogeneity degree `gamma` against the base
/// interval's upper bound, centered on the base midpoint and shifted (never
/// shrunk below positive costs) when it would leave `(0, global_max]`.
fn heterogeneity_interval(base: (f64, f64), gamma: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::InvalidParams(format!("heterogeneity degree must lie in [0, 1], got {gamma}")));
    }
    let global_max = base.1;
    let width = gamma * global_max;
    let mid = (base.0 + base.1) / 2.0;
    let mut lo = mid - width / 2.0;
    let mut hi = lo + width;
    if hi > global_max {
        hi = global_max;
        lo = hi - width;
    }
    let floor = global_max * 1e-9;
    if lo < floor {
        lo = floor;
        hi = (lo + width).min(global_max);
    }
    Ok((lo, hi))
}

pub const RUNS_CSV_HEADER: &str = "scenario,algorithm,seed,objective,cu_rate,iterations,converged,wall_ms";
pub const SUMMARY_CSV_HEADER: &str = "scenario,algorithm,best,worst,average,gap_pct,cu_rate,cpu_time_s";

/// Per-run CSV. Identical across executions of one config except for the
/// `wall_ms` column.
pub fn runs_csv(records: &[RunRecord]) -> String {
    let mut out = String::from(RUNS_CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.scenario,
            r.algorithm,
            r.seed,
            r.objective,
            r.cu_rate,
            r.iterations,
            r.converged,
            r.wall.as_millis()
        ));
    }
    out
}

/// Aggregate CSV mirroring [`MetricsRow`]; the gap cell is empty when
/// undefined.
pub fn summary_csv(rows: &[MetricsRow]) -> String {
    let mut out = String::from(SUMMARY_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let gap = r.gap_pct.map(|g| format!("{g:.2}")).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{:.6}\n",
            r.scenario, r.algorithm, r.best, r.worst, r.average, gap, r.cu_rate, r.cpu_time_s
        ));
    }
    out
}

/// Writes `runs.csv` and `summary.csv` under `dir`, creating it if needed.
pub fn write_report_files(report: &ExperimentReport, dir: &Path) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir)?;
    let runs_path = dir.join("runs.csv");
    let summary_path = dir.join("summary.csv");
    fs::write(&runs_path, runs_csv(&report.runs))?;
    fs::write(&summary_path, summary_csv(&report.rows))?;
    Ok((runs_path, summary_path))
}
